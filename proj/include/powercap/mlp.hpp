#ifndef POWERCAP_MLP_HPP
#define POWERCAP_MLP_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace powercap {

enum class Activation : std::uint8_t { kIdentity = 0, kTanh = 1, kRelu = 2 };

struct DenseLayer
{
    Eigen::MatrixXd weights; // outputs x inputs
    Eigen::VectorXd biases;
    Activation activation = Activation::kIdentity;
};

/// Per-feature affine map: normalized = (raw - mean) / scale.
struct Normalization
{
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Normalization identity(int dim);
};

/// Training samples stored column-wise (one column per sample).
struct Dataset
{
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;

    Eigen::Index size() const { return inputs.cols(); }
};

/// Feedforward network with affine input/output normalization stored alongside
/// the weights. Immutable once built; `forward` is thread-safe.
class NeuralNet
{
public:
    static constexpr int kMaxWidth = 256;

    NeuralNet() = default;
    NeuralNet(std::vector<DenseLayer> layers, Normalization input, Normalization output);

    /// Glorot-uniform initialisation; `dims` = {inputs, hidden..., outputs}.
    /// Hidden layers use `hidden`, the last layer is linear.
    static NeuralNet make(std::span<const int> dims, Activation hidden, std::uint64_t seed);

    bool empty() const { return layers_.empty(); }
    int input_dim() const;
    int output_dim() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    const Normalization& input_norm() const { return input_norm_; }
    const Normalization& output_norm() const { return output_norm_; }

    NeuralNet with_normalization(Normalization input, Normalization output) const;

    Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& input) const;
    /// Allocation-free evaluation of a single-output net.
    double forward_scalar(std::span<const double> input) const;
    /// Columns are samples; returns de-normalized outputs column-wise.
    Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const;

    std::size_t parameter_count() const;
    /// Weights (column-major per layer) followed by biases, layer by layer.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta);

    bool operator==(const NeuralNet& other) const;

private:
    std::vector<DenseLayer> layers_;
    Normalization input_norm_;
    Normalization output_norm_;
};

Eigen::VectorXd forward(const NeuralNet& net, const Eigen::Ref<const Eigen::VectorXd>& input);

/// Mean-squared error over all outputs in normalized space, and its gradient
/// with respect to `net.parameters()`. Inputs/targets are raw (de-normalized).
std::pair<double, Eigen::VectorXd> loss_and_gradient(const NeuralNet& net, const Dataset& batch);
double loss(const NeuralNet& net, const Dataset& batch);

/// Zero-mean/unit-variance statistics of the columns; constant features get scale 1.
Normalization fit_normalization(const Eigen::Ref<const Eigen::MatrixXd>& samples);

struct TrainConfig
{
    double learning_rate = 1e-3;
    /// Cosine-annealed down to this rate by the last epoch; equal to
    /// `learning_rate` for a constant schedule.
    double final_learning_rate = 1e-3;
    int batch_size = 64;
    int epochs = 200;
    std::uint64_t seed = 1;
    double validation_fraction = 0.1;
    int early_stop_patience = 50;
    /// Recompute the input/output normalization from the training split.
    bool fit_normalization = true;

    void validate() const;
};

struct EpochLoss
{
    double train = 0;
    double validation = 0;
};

struct TrainResult
{
    NeuralNet net;
    std::vector<EpochLoss> history;
    int best_epoch = 0;
};

/// Mini-batch Adam on the MSE; returns the best-validation snapshot.
TrainResult train(const NeuralNet& initial, const Dataset& data, const TrainConfig& cfg);

void save(const NeuralNet& net, const std::filesystem::path& path);
NeuralNet load(const std::filesystem::path& path);

} // namespace powercap

#endif // POWERCAP_MLP_HPP
