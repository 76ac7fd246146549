#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "freeflow/autocal/calibration.hpp"
#include "freeflow/compensate/mlp.hpp"
#include "freeflow/compensate/samples.hpp"
#include "freeflow/errors.hpp"
#include "freeflow/pipeline/align_report.hpp"
#include "freeflow/pipeline/evaluate.hpp"
#include "freeflow/pipeline/pipeline.hpp"
#include "freeflow/pipeline/source.hpp"
#include "freeflow/sim/blackbody.hpp"
#include "freeflow/sim/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ff;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Bad user input discovered after parsing (e.g. an invalid config value).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json readJsonFile(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void ensureDir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void ensureParent(const fs::path& file) {
    if (file.has_parent_path()) ensureDir(file.parent_path());
}

std::ofstream openOut(const fs::path& path) {
    ensureParent(path);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

template <class F>
auto configErrorsAsUsage(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

// ---- simulate ----

struct SimulateOpts {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
};

int cmdSimulate(const SimulateOpts& o) {
    sim::GeneratorConfig gc;
    if (!o.config.empty()) gc = configErrorsAsUsage([&] { return sim::generatorConfigFromJson(readJsonFile(o.config)); });
    auto scenario = configErrorsAsUsage([&] { return sim::generateScenario(gc, o.seed); });
    sim::writeDataset(scenario, o.out);

    sim::SweepConfig sc;
    sc.ambient_temp = scenario.ambient_temp;
    sc.attenuation_kappa = scenario.attenuation_kappa;
    sc.noise_sigma = scenario.thermal_noise_sigma;
    std::vector<compensate::Sample> sweep;
    for (const auto& r : sim::blackBodySweep(sc, o.seed)) sweep.push_back({r.distance, r.measured, r.reference});
    compensate::writeSamplesCsv(fs::path(o.out) / "blackbody_sweep.csv", sweep);

    std::printf("wrote %s: %d frames, %zu people, %zu black-body samples\n", o.out.c_str(), scenario.frameCount(),
                scenario.people.size(), sweep.size());
    return 0;
}

// ---- run ----

struct RunOpts {
    std::string dataset;
    std::string config;
    std::string out;
    std::string model;
    std::optional<int> threads;
    bool annotate = false;
};

pipeline::PipelineConfig loadPipelineConfig(const std::string& path) {
    if (path.empty()) return {};
    return configErrorsAsUsage([&] { return pipeline::pipelineConfigFromJson(readJsonFile(path)); });
}

int cmdRun(const RunOpts& o) {
    auto cfg = loadPipelineConfig(o.config);
    if (!o.model.empty()) cfg.compensation_model = o.model;
    if (o.threads) cfg.threads = *o.threads;
    if (o.annotate) cfg.write_annotated = true;
    configErrorsAsUsage([&] { cfg.validate(); return 0; });

    pipeline::DatasetSource source(sim::readDataset(o.dataset));
    ensureDir(o.out);
    auto s = pipeline::runPipeline(source, cfg, fs::path(o.out));
    std::printf("frames %d  readings %zu  alerts %zu  fps %.2f  latency p50 %.1f ms p95 %.1f ms\n", s.frames,
                s.readings.size(), s.alerts.size(), s.fps, s.latency_p50, s.latency_p95);
    if (s.metrics) {
        const auto& m = *s.metrics;
        std::printf("tp %d fp %d tn %d fn %d  sensitivity %.3f%s  specificity %.3f\n", m.tp, m.fp, m.tn, m.fn,
                    m.sensitivity, m.vacuous_sensitivity ? " (vacuous)" : "", m.specificity);
    }
    return 0;
}

// ---- train-compensation ----

struct TrainOpts {
    std::string data;
    std::string out;
    compensate::TrainConfig train;
};

int cmdTrain(const TrainOpts& o) {
    auto samples = compensate::readSamplesCsv(o.data);
    configErrorsAsUsage([&] { o.train.validate(); return 0; });
    compensate::TrainResult r;
    try {
        r = compensate::trainAdam(samples, o.train);
    } catch (const compensate::TrainingError& e) {
        throw DataError(e.what());
    }
    ensureParent(o.out);
    compensate::saveModel(o.out, r.model);
    const auto& rep = r.report;
    auto history = std::filesystem::path(o.out).parent_path() / "loss_history.csv";
    std::FILE* f = std::fopen(history.string().c_str(), "w");
    if (!f) throw DataError("cannot write " + history.string());
    std::fprintf(f, "epoch,train_mse\n");
    for (std::size_t e = 0; e < rep.epoch_train_mse.size(); ++e) std::fprintf(f, "%zu,%.8f\n", e + 1, rep.epoch_train_mse[e]);
    std::fprintf(f, "test,%.8f\n", rep.test_mse);
    std::fclose(f);
    std::printf("samples %zu (train %zu, test %zu)  final train mse %.5f  test mse %.5f\n", rep.n, rep.n_train,
                rep.n_test, rep.epoch_train_mse.empty() ? 0.0 : rep.epoch_train_mse.back(), rep.test_mse);
    return 0;
}

// ---- calibrate ----

struct CalibrateOpts {
    std::string dataset;
    std::string out;
    autocal::CalibConfig calib;
    bool reference_set = false;
};

int cmdCalibrate(CalibrateOpts o) {
    auto ds = sim::readDataset(o.dataset);
    if (!o.reference_set) o.calib.reference_temp = ds.scenario.black_body.reference_temp;
    o.calib.roi = ds.scenario.black_body.roi;
    autocal::CalibState state(configErrorsAsUsage([&] { o.calib.validate(); return o.calib; }));

    autocal::ThermalSource src = [&](int seq) {
        return std::pair{ds.scenario.frameTime(seq), sim::readThermal(sim::thermalFramePath(ds.dir, seq))};
    };
    autocal::CalibTrace trace;
    try {
        trace = autocal::runCalibrationLoop(ds.frameCount(), src, state);
    } catch (const std::out_of_range& e) {
        throw DataError(std::string("black-body ROI outside the thermal frame: ") + e.what());
    }

    auto out = openOut(o.out);
    out << "time_s,measured_c,error_c,offset_c,signal\n";
    char buf[160];
    int signals = 0;
    for (const auto& s : trace) {
        std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f,%d\n", s.time, s.measured, s.error, s.offset_after,
                      s.signal ? 1 : 0);
        out << buf;
        signals += s.signal;
    }
    std::printf("frames %zu  signals %d  final offset %.3f C  final error %.3f C\n", trace.size(), signals,
                state.correction_offset, trace.empty() ? 0.0 : trace.back().error);
    return 0;
}

// ---- align-report ----

struct AlignReportOpts {
    std::string dataset;
    std::string config;
    std::string out;
};

int cmdAlignReport(const AlignReportOpts& o) {
    auto cfg = loadPipelineConfig(o.config);
    cfg.calibration_enabled = false;
    cfg.write_annotated = false;
    auto ds = sim::readDataset(o.dataset);
    const sim::Scenario scenario = ds.scenario;
    const align::AffineOffset manual = pipeline::manualOffsetFor(cfg, scenario.geometry);

    std::vector<pipeline::AlignmentErrorRow> rows;
    auto observer = [&](const pipeline::Frame& f, const pipeline::FrameResult& r) {
        auto add = pipeline::alignmentErrors(f, r, scenario, manual);
        rows.insert(rows.end(), add.begin(), add.end());
    };
    pipeline::DatasetSource source(std::move(ds));
    pipeline::runPipeline(source, cfg, nullptr, std::nullopt, observer);
    ensureParent(o.out);
    pipeline::writeAlignmentReport(o.out, rows);

    double worst = 0.0;
    int dynamic = 0;
    for (const auto& r : rows) {
        if (!r.dynamic) continue;
        ++dynamic;
        worst = std::max(worst, std::hypot(r.x_dynamic, r.y_dynamic));
    }
    std::printf("rows %zu  dynamic %d  worst dynamic residual %.2f px\n", rows.size(), dynamic, worst);
    return 0;
}

// ---- eval ----

struct EvalOpts {
    std::string alerts;
    std::string groundtruth;
    double threshold = 38.0;
    std::string out;
};

int cmdEval(const EvalOpts& o) {
    auto alerts = pipeline::readAlertsJsonl(o.alerts);
    auto truth = sim::readGroundTruthCsv(o.groundtruth);
    pipeline::Metrics m;
    try {
        m = pipeline::evaluate(alerts, truth, o.threshold);
    } catch (const pipeline::EvaluationError& e) {
        throw DataError(e.what());
    }
    std::printf("tp %d fp %d tn %d fn %d\nsensitivity %.3f%s\nspecificity %.3f\n", m.tp, m.fp, m.tn, m.fn,
                m.sensitivity, m.vacuous_sensitivity ? " (vacuous)" : "", m.specificity);
    if (!o.out.empty()) openOut(o.out) << pipeline::toJson(m).dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free-flow fever screening: simulation, pipeline runs, training, calibration and evaluation."};
    app.failure_message(CLI::FailureMessage::help);
    app.require_subcommand(1, 1);

    SimulateOpts sim_o;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
    sim->add_option("--config", sim_o.config, "Scenario generator JSON; absent keys keep defaults")->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_o.seed, "Scenario seed")->capture_default_str();
    sim->add_option("--out", sim_o.out, "Output dataset directory")->required();
    sim->footer("Default generator config:\n" + sim::toJson(sim::GeneratorConfig{}).dump(2));

    RunOpts run_o;
    auto* run = app.add_subcommand("run", "Run the screening pipeline over a dataset");
    run->add_option("--dataset", run_o.dataset, "Dataset directory")->required();
    run->add_option("--config", run_o.config, "Pipeline config JSON; absent keys keep defaults");
    run->add_option("--out", run_o.out, "Output directory")->required();
    run->add_option("--model", run_o.model, "Compensation model JSON (overrides compensation_model)");
    run->add_option("--threads", run_o.threads, "Worker threads, 0 = single-threaded (overrides config and F3S_THREADS)")
        ->check(CLI::NonNegativeNumber);
    run->add_flag("--annotate", run_o.annotate, "Write annotated frames as PPM");
    run->footer("Default pipeline config:\n" + pipeline::toJson(pipeline::PipelineConfig{}).dump(2));

    TrainOpts tr_o;
    auto* tr = app.add_subcommand("train-compensation", "Train the distance-compensation network");
    tr->add_option("--data", tr_o.data, "CSV with distance_m, measured_c|raw_c, reference_c|truth_c|core_temp_c")
        ->required();
    tr->add_option("--out", tr_o.out, "Model JSON to write; loss_history.csv goes next to it")->required();
    tr->add_option("--epochs", tr_o.train.epochs, "Training epochs")->capture_default_str();
    tr->add_option("--batch", tr_o.train.batch_size, "Mini-batch size")->capture_default_str();
    tr->add_option("--hidden", tr_o.train.hidden, "Hidden units")->capture_default_str();
    tr->add_option("--lr", tr_o.train.alpha, "Adam step size")->capture_default_str();
    tr->add_option("--train-fraction", tr_o.train.train_fraction, "Training split fraction")->capture_default_str();
    tr->add_option("--seed", tr_o.train.seed, "Split, shuffle and initialization seed")->capture_default_str();

    CalibrateOpts cal_o;
    auto* cal = app.add_subcommand("calibrate", "Run the black-body feedback loop over a dataset's thermal frames");
    cal->add_option("--dataset", cal_o.dataset, "Dataset directory")->required();
    cal->add_option("--out", cal_o.out, "Trace CSV to write")->required();
    cal->add_option("--k-p", cal_o.calib.k_p, "Proportional gain")->capture_default_str();
    cal->add_option("--settling", cal_o.calib.settling_period, "Seconds between control signals")->capture_default_str();
    cal->add_option("--threshold", cal_o.calib.error_threshold, "Deadband, C")->capture_default_str();
    cal->add_option("--reference", cal_o.calib.reference_temp, "Black-body set point, C (default: from the dataset)")
        ->each([&](const std::string&) { cal_o.reference_set = true; });

    AlignReportOpts al_o;
    auto* al = app.add_subcommand("align-report", "Per-person alignment residuals against simulator truth");
    al->add_option("--dataset", al_o.dataset, "Dataset directory")->required();
    al->add_option("--config", al_o.config, "Pipeline config JSON");
    al->add_option("--out", al_o.out, "Report CSV to write")->required();

    EvalOpts ev_o;
    auto* ev = app.add_subcommand("eval", "Per-person confusion counts from alerts and ground truth");
    ev->add_option("--alerts", ev_o.alerts, "alerts.jsonl")->required();
    ev->add_option("--groundtruth", ev_o.groundtruth, "groundtruth.csv")->required();
    ev->add_option("--threshold", ev_o.threshold, "Fever threshold, C")->capture_default_str();
    ev->add_option("--out", ev_o.out, "Optional metrics JSON to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*sim) return cmdSimulate(sim_o);
        if (*run) return cmdRun(run_o);
        if (*tr) return cmdTrain(tr_o);
        if (*cal) return cmdCalibrate(cal_o);
        if (*al) return cmdAlignReport(al_o);
        if (*ev) return cmdEval(ev_o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
