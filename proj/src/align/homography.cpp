#include "freeflow/align/homography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace ff::align {

Point2 applyHomography(const Eigen::Matrix3d& h, Point2 p) {
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

Point2 Homography::apply(Point2 p) const { return applyHomography(h, p); }

namespace {

Eigen::Matrix3d normalizer(std::span<const Point2> pts) {
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - mx, p.y - my);
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
    return t;
}

double cross(Point2 a, Point2 b, Point2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool collinearTriple(const std::array<Point2, 4>& p) {
    double scale = 0.0;
    for (const auto& q : p) scale = std::max({scale, std::abs(q.x - p[0].x), std::abs(q.y - p[0].y)});
    const double eps = 1e-6 * std::max(scale * scale, 1e-12);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                if (std::abs(cross(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)], p[static_cast<std::size_t>(k)])) <= eps)
                    return true;
    return false;
}

double residual(const Eigen::Matrix3d& h, const Correspondence& c) {
    const Point2 q = applyHomography(h, c.src);
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) return std::numeric_limits<double>::infinity();
    return std::hypot(q.x - c.dst.x, q.y - c.dst.y);
}

}  // namespace

std::optional<Eigen::Matrix3d> fitHomographyDlt(std::span<const Correspondence> pts) {
    const std::size_t n = pts.size();
    if (n < 4) return std::nullopt;
    std::vector<Point2> src(n), dst(n);
    for (std::size_t i = 0; i < n; ++i) {
        src[i] = pts[i].src;
        dst[i] = pts[i].dst;
    }
    const Eigen::Matrix3d ts = normalizer(src);
    const Eigen::Matrix3d td = normalizer(dst);
    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    // a second near-zero singular value means the solution is not unique (e.g. collinear points)
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() < 8 || sv(7) <= 1e-9 * sv(0)) return std::nullopt;
    const Eigen::VectorXd hv = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
    Eigen::Matrix3d h = td.inverse() * hn * ts;
    if (std::abs(h(2, 2)) < 1e-14) return std::nullopt;
    h /= h(2, 2);
    if (!h.allFinite() || std::abs(h.determinant()) <= 1e-12) return std::nullopt;
    return h;
}

Homography estimateHomography(std::span<const Correspondence> pts, const RansacParams& params) {
    const std::size_t n = pts.size();
    if (n < 4) throw InsufficientCorrespondences("estimateHomography: need at least 4 correspondences");

    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    Eigen::Matrix3d best_h = Eigen::Matrix3d::Identity();
    std::size_t best_count = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    bool found = false;
    int needed = params.max_iterations;
    int degenerate = 0;

    for (int iter = 0; iter < needed && iter < params.max_iterations; ++iter) {
        std::array<std::size_t, 4> idx{};
        for (std::size_t k = 0; k < 4; ++k) {
            std::size_t cand;
            do {
                cand = pick(rng);
            } while (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), cand) !=
                     idx.begin() + static_cast<std::ptrdiff_t>(k));
            idx[k] = cand;
        }
        std::array<Point2, 4> s{}, d{};
        std::array<Correspondence, 4> sample{};
        for (std::size_t k = 0; k < 4; ++k) {
            sample[k] = pts[idx[k]];
            s[k] = sample[k].src;
            d[k] = sample[k].dst;
        }
        if (collinearTriple(s) || collinearTriple(d)) {
            ++degenerate;
            continue;
        }
        const auto h = fitHomographyDlt(sample);
        if (!h) {
            ++degenerate;
            continue;
        }
        std::size_t count = 0;
        double cost = 0.0;
        for (const auto& c : pts) {
            const double r = residual(*h, c);
            if (r <= params.inlier_threshold) {
                ++count;
                cost += r;
            }
        }
        if (count > best_count || (count == best_count && cost < best_cost)) {
            best_count = count;
            best_cost = cost;
            best_h = *h;
            found = true;
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double p_fail = 1.0 - std::pow(w, 4.0);
            if (p_fail <= 1e-12) {
                needed = iter + 1;
            } else {
                const double k = std::log(1.0 - params.confidence) / std::log(p_fail);
                needed = static_cast<int>(std::min<double>(params.max_iterations, std::ceil(k)));
            }
        }
    }
    if (!found) throw DegenerateConfiguration("estimateHomography: every sample was degenerate (" + std::to_string(degenerate) + ")");

    // refit on inliers until the inlier set settles
    Eigen::Matrix3d h = best_h;
    std::vector<int> inliers;
    for (int round = 0; round < 5; ++round) {
        std::vector<int> current;
        for (std::size_t i = 0; i < n; ++i)
            if (residual(h, pts[i]) <= params.inlier_threshold) current.push_back(static_cast<int>(i));
        if (current == inliers || current.size() < 4) {
            if (current.size() >= 4 || inliers.empty()) inliers = current;
            break;
        }
        inliers = current;
        std::vector<Correspondence> sel;
        sel.reserve(inliers.size());
        for (int i : inliers) sel.push_back(pts[static_cast<std::size_t>(i)]);
        const auto refit = fitHomographyDlt(sel);
        if (!refit) break;
        h = *refit;
    }
    // the reported inlier set is always measured against the returned matrix
    Homography out;
    out.h = h;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = residual(h, pts[i]);
        if (r <= params.inlier_threshold) {
            out.inliers.push_back(static_cast<int>(i));
            sum += r;
        }
    }
    out.inlier_count = static_cast<int>(out.inliers.size());
    out.mean_residual = out.inliers.empty() ? 0.0 : sum / static_cast<double>(out.inliers.size());
    return out;
}

}  // namespace ff::align
