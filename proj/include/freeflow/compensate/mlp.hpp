#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace ff::compensate {

/// One labelled measurement: what the sensor read at some distance, and the true temperature.
struct Sample {
    double distance = 0.0;  ///< meters
    double measured = 0.0;  ///< °C
    double truth = 0.0;     ///< °C
};

/// 2-H-1 regressor with a ReLU hidden layer. Inputs and output are standardized with the
/// constants stored in the model.
struct MLP {
    Eigen::MatrixXd w1;  ///< H x 2
    Eigen::VectorXd b1;  ///< H
    Eigen::VectorXd w2;  ///< H
    double b2 = 0.0;
    Eigen::Vector2d input_mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d input_std = Eigen::Vector2d::Ones();
    double output_mean = 0.0;
    double output_std = 1.0;

    int hidden() const { return static_cast<int>(b1.size()); }

    /// All parameters zero, identity standardization.
    static MLP zeros(int hidden);
    /// Glorot-uniform weights, zero biases, identity standardization.
    static MLP initialized(int hidden, std::uint64_t seed);

    /// Flat parameter vector: w1 row-major, b1, w2, b2.
    Eigen::VectorXd parameters() const;
    void setParameters(const Eigen::VectorXd& p);
    std::size_t parameterCount() const { return static_cast<std::size_t>(4 * hidden() + 1); }
};

/// Network output before destandardization, for an already standardized input.
double forwardStandardized(const MLP& net, const Eigen::Vector2d& z);

/// Predicted true temperature (°C) for a reading at `distance`.
double forward(const MLP& net, double distance, double measured);

/// Squared error of one sample and its gradient with respect to parameters().
double sampleLossGradient(const MLP& net, const Sample& s, Eigen::VectorXd& grad);

/// Mean squared error. Throws std::invalid_argument on empty or unequal inputs.
double lossMSE(std::span<const double> predictions, std::span<const double> targets);

struct TrainConfig {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    int epochs = 100;
    int batch_size = 1;
    double train_fraction = 0.7;
    int hidden = 16;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LossReport {
    std::vector<double> epoch_train_mse;  ///< training-split MSE after each epoch, °C²
    double test_mse = 0.0;
    std::size_t n = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

struct TrainResult {
    MLP model;
    LossReport report;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adam training on a seeded 70:30 split; standardization constants come from the training split.
/// Throws TrainingError when fewer than 10 samples are given or the loss turns non-finite.
TrainResult trainAdam(std::span<const Sample> data, const TrainConfig& config);

/// One Adam step on `params` in place; `t` is the 1-based step count.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long t = 0;
};
void adamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, const TrainConfig& config);

/// Largest relative error between analytic and central-difference gradients (step h).
double gradientCheck(const MLP& net, const Sample& s, double h = 1e-5);

struct Correction {
    double value = 0.0;
    bool passthrough = false;  ///< no model: value is the raw reading
};

/// Model output clamped to [lo, hi]; raw reading unchanged when no model is configured.
Correction correctTemperature(const MLP* net, double raw, double distance, double lo = 30.0, double hi = 45.0);

nlohmann::json toJson(const MLP& net);
/// Throws std::invalid_argument on malformed or inconsistent content.
MLP mlpFromJson(const nlohmann::json& j);
void saveModel(const std::string& path, const MLP& net);
MLP loadModel(const std::string& path);

}  // namespace ff::compensate
