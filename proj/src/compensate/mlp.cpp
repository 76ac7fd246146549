#include "freeflow/compensate/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace ff::compensate {

using nlohmann::json;

MLP MLP::zeros(int hidden) {
    if (hidden <= 0) throw std::invalid_argument("mlp: hidden width must be positive");
    MLP m;
    m.w1 = Eigen::MatrixXd::Zero(hidden, 2);
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2 = Eigen::VectorXd::Zero(hidden);
    return m;
}

MLP MLP::initialized(int hidden, std::uint64_t seed) {
    MLP m = zeros(hidden);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u1(-std::sqrt(6.0 / (2 + hidden)), std::sqrt(6.0 / (2 + hidden)));
    std::uniform_real_distribution<double> u2(-std::sqrt(6.0 / (hidden + 1)), std::sqrt(6.0 / (hidden + 1)));
    for (int i = 0; i < hidden; ++i)
        for (int j = 0; j < 2; ++j) m.w1(i, j) = u1(rng);
    for (int i = 0; i < hidden; ++i) m.w2(i) = u2(rng);
    return m;
}

Eigen::VectorXd MLP::parameters() const {
    const int h = hidden();
    Eigen::VectorXd p(4 * h + 1);
    for (int i = 0; i < h; ++i) {
        p(2 * i) = w1(i, 0);
        p(2 * i + 1) = w1(i, 1);
    }
    p.segment(2 * h, h) = b1;
    p.segment(3 * h, h) = w2;
    p(4 * h) = b2;
    return p;
}

void MLP::setParameters(const Eigen::VectorXd& p) {
    const int h = hidden();
    if (p.size() != 4 * h + 1) throw std::invalid_argument("mlp: parameter vector has the wrong size");
    for (int i = 0; i < h; ++i) {
        w1(i, 0) = p(2 * i);
        w1(i, 1) = p(2 * i + 1);
    }
    b1 = p.segment(2 * h, h);
    w2 = p.segment(3 * h, h);
    b2 = p(4 * h);
}

double forwardStandardized(const MLP& net, const Eigen::Vector2d& z) {
    Eigen::VectorXd a = (net.w1 * z + net.b1).cwiseMax(0.0);
    return net.w2.dot(a) + net.b2;
}

namespace {

Eigen::Vector2d standardize(const MLP& net, double distance, double measured) {
    return {(distance - net.input_mean(0)) / net.input_std(0), (measured - net.input_mean(1)) / net.input_std(1)};
}

}  // namespace

double forward(const MLP& net, double distance, double measured) {
    return net.output_mean + net.output_std * forwardStandardized(net, standardize(net, distance, measured));
}

double sampleLossGradient(const MLP& net, const Sample& s, Eigen::VectorXd& grad) {
    const int h = net.hidden();
    Eigen::Vector2d z = standardize(net, s.distance, s.measured);
    Eigen::VectorXd pre = net.w1 * z + net.b1;
    Eigen::VectorXd a = pre.cwiseMax(0.0);
    double out = net.output_mean + net.output_std * (net.w2.dot(a) + net.b2);
    double err = out - s.truth;
    double g_out = 2.0 * err * net.output_std;  // dL / d(raw output)

    grad.resize(4 * h + 1);
    for (int i = 0; i < h; ++i) {
        double g_pre = pre(i) > 0.0 ? g_out * net.w2(i) : 0.0;
        grad(2 * i) = g_pre * z(0);
        grad(2 * i + 1) = g_pre * z(1);
        grad(2 * h + i) = g_pre;
        grad(3 * h + i) = g_out * a(i);
    }
    grad(4 * h) = g_out;
    return err * err;
}

double lossMSE(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.empty()) throw std::invalid_argument("lossMSE: empty input");
    if (predictions.size() != targets.size()) throw std::invalid_argument("lossMSE: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double d = predictions[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

void TrainConfig::validate() const {
    if (!(alpha > 0)) throw std::invalid_argument("train config: alpha must be positive");
    if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
        throw std::invalid_argument("train config: betas must lie in (0, 1)");
    if (!(epsilon > 0)) throw std::invalid_argument("train config: epsilon must be positive");
    if (epochs < 0) throw std::invalid_argument("train config: epochs must be non-negative");
    if (batch_size != 1) throw std::invalid_argument("train config: only batch size 1 is supported");
    if (!(train_fraction > 0 && train_fraction < 1)) throw std::invalid_argument("train config: bad split");
    if (hidden <= 0) throw std::invalid_argument("train config: hidden width must be positive");
}

void adamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& st, const TrainConfig& c) {
    if (st.m.size() != params.size()) {
        st.m = Eigen::VectorXd::Zero(params.size());
        st.v = Eigen::VectorXd::Zero(params.size());
        st.t = 0;
    }
    ++st.t;
    st.m = c.beta1 * st.m + (1 - c.beta1) * grad;
    st.v = c.beta2 * st.v + (1 - c.beta2) * grad.cwiseProduct(grad);
    double bc1 = 1 - std::pow(c.beta1, static_cast<double>(st.t));
    double bc2 = 1 - std::pow(c.beta2, static_cast<double>(st.t));
    params.array() -= c.alpha * (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + c.epsilon);
}

namespace {

double datasetMse(const MLP& net, std::span<const Sample> data, std::span<const std::size_t> idx) {
    double sum = 0;
    for (auto i : idx) {
        double d = forward(net, data[i].distance, data[i].measured) - data[i].truth;
        sum += d * d;
    }
    return idx.empty() ? 0.0 : sum / static_cast<double>(idx.size());
}

}  // namespace

TrainResult trainAdam(std::span<const Sample> data, const TrainConfig& config) {
    config.validate();
    if (data.size() < 10) throw TrainingError("trainAdam: need at least 10 samples, got " + std::to_string(data.size()));
    for (const auto& s : data)
        if (!std::isfinite(s.distance) || !std::isfinite(s.measured) || !std::isfinite(s.truth))
            throw TrainingError("trainAdam: non-finite sample");

    std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(data.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, data.size() - 1);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    TrainResult r;
    r.model = MLP::initialized(config.hidden, config.seed);
    auto& net = r.model;
    {
        Eigen::Vector2d mean = Eigen::Vector2d::Zero(), sq = Eigen::Vector2d::Zero();
        double ym = 0, ysq = 0;
        for (auto i : train) {
            Eigen::Vector2d x(data[i].distance, data[i].measured);
            mean += x;
            sq += x.cwiseProduct(x);
            ym += data[i].truth;
            ysq += data[i].truth * data[i].truth;
        }
        const double n = static_cast<double>(train.size());
        mean /= n;
        Eigen::Vector2d var = sq / n - mean.cwiseProduct(mean);
        net.input_mean = mean;
        for (int k = 0; k < 2; ++k) net.input_std(k) = var(k) > 1e-12 ? std::sqrt(var(k)) : 1.0;
        ym /= n;
        double yvar = ysq / n - ym * ym;
        net.output_mean = ym;
        net.output_std = yvar > 1e-12 ? std::sqrt(yvar) : 1.0;
    }

    AdamState adam;
    Eigen::VectorXd params = net.parameters();
    Eigen::VectorXd grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        double sum = 0.0;
        for (auto i : train) {
            net.setParameters(params);
            double loss = sampleLossGradient(net, data[i], grad);
            if (!std::isfinite(loss) || !grad.allFinite()) throw TrainingError("trainAdam: loss diverged");
            sum += loss;
            adamStep(params, grad, adam, config);
        }
        r.report.epoch_train_mse.push_back(sum / static_cast<double>(train.size()));
    }
    net.setParameters(params);
    r.report.test_mse = datasetMse(net, data, test);
    r.report.n = data.size();
    r.report.n_train = train.size();
    r.report.n_test = test.size();
    return r;
}

double gradientCheck(const MLP& net, const Sample& s, double h) {
    Eigen::VectorXd analytic;
    sampleLossGradient(net, s, analytic);
    MLP probe = net;
    Eigen::VectorXd p = net.parameters();
    Eigen::VectorXd scratch;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        Eigen::VectorXd q = p;
        q(k) = p(k) + h;
        probe.setParameters(q);
        double up = sampleLossGradient(probe, s, scratch);
        q(k) = p(k) - h;
        probe.setParameters(q);
        double down = sampleLossGradient(probe, s, scratch);
        double numeric = (up - down) / (2 * h);
        double scale = std::max({std::abs(numeric), std::abs(analytic(k)), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic(k)) / scale);
    }
    return worst;
}

Correction correctTemperature(const MLP* net, double raw, double distance, double lo, double hi) {
    if (!net) return {raw, true};
    return {std::clamp(forward(*net, distance, raw), lo, hi), false};
}

json toJson(const MLP& net) {
    const int h = net.hidden();
    std::vector<double> w1(static_cast<std::size_t>(2 * h)), b1(net.b1.data(), net.b1.data() + h),
        w2(net.w2.data(), net.w2.data() + h);
    for (int i = 0; i < h; ++i) {
        w1[static_cast<std::size_t>(2 * i)] = net.w1(i, 0);
        w1[static_cast<std::size_t>(2 * i + 1)] = net.w1(i, 1);
    }
    return json{{"layers", {2, h, 1}},
                {"activation", "relu"},
                {"input_mean", {net.input_mean(0), net.input_mean(1)}},
                {"input_std", {net.input_std(0), net.input_std(1)}},
                {"output_mean", net.output_mean},
                {"output_std", net.output_std},
                {"w1", w1},
                {"b1", b1},
                {"w2", w2},
                {"b2", net.b2}};
}

MLP mlpFromJson(const json& j) {
    try {
        auto layers = j.at("layers").get<std::vector<int>>();
        if (layers.size() != 3 || layers[0] != 2 || layers[2] != 1 || layers[1] <= 0)
            throw std::invalid_argument("model: layers must be [2, H, 1]");
        const int h = layers[1];
        MLP m = MLP::zeros(h);
        auto w1 = j.at("w1").get<std::vector<double>>();
        auto b1 = j.at("b1").get<std::vector<double>>();
        auto w2 = j.at("w2").get<std::vector<double>>();
        auto im = j.at("input_mean").get<std::vector<double>>();
        auto is = j.at("input_std").get<std::vector<double>>();
        if (w1.size() != static_cast<std::size_t>(2 * h) || b1.size() != static_cast<std::size_t>(h) ||
            w2.size() != static_cast<std::size_t>(h) || im.size() != 2 || is.size() != 2)
            throw std::invalid_argument("model: array sizes do not match the layer sizes");
        for (int i = 0; i < h; ++i) {
            m.w1(i, 0) = w1[static_cast<std::size_t>(2 * i)];
            m.w1(i, 1) = w1[static_cast<std::size_t>(2 * i + 1)];
            m.b1(i) = b1[static_cast<std::size_t>(i)];
            m.w2(i) = w2[static_cast<std::size_t>(i)];
        }
        m.b2 = j.at("b2").get<double>();
        m.input_mean = {im[0], im[1]};
        m.input_std = {is[0], is[1]};
        m.output_mean = j.at("output_mean").get<double>();
        m.output_std = j.at("output_std").get<double>();
        if (!m.parameters().allFinite() || !(m.input_std.array() > 0).all() || !(m.output_std > 0))
            throw std::invalid_argument("model: non-finite parameters or non-positive scale");
        return m;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model: ") + e.what());
    }
}

void saveModel(const std::string& path, const MLP& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << toJson(net).dump(2) << '\n';
}

MLP loadModel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    try {
        return mlpFromJson(json::parse(in));
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace ff::compensate
