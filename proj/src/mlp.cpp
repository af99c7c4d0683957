#include "powercap/mlp.hpp"

#include "powercap/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace powercap {

namespace {

using Buffer = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, NeuralNet::kMaxWidth, 1>;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void shuffle(std::vector<Eigen::Index>& order, std::mt19937_64& rng)
{
    for (std::size_t k = order.size(); k > 1; --k)
        std::swap(order[k - 1], order[rng() % k]);
}

template <typename Derived>
void activate(Eigen::MatrixBase<Derived>& z, Activation act)
{
    switch (act) {
    case Activation::kIdentity:
        break;
    case Activation::kTanh:
        z = z.array().tanh().matrix();
        break;
    case Activation::kRelu:
        z = z.cwiseMax(0.0);
        break;
    }
}

// Derivative expressed through the activation output.
Eigen::ArrayXXd activation_slope(const Eigen::MatrixXd& out, Activation act)
{
    switch (act) {
    case Activation::kTanh:
        return 1.0 - out.array().square();
    case Activation::kRelu:
        return (out.array() > 0.0).cast<double>();
    case Activation::kIdentity:
    default:
        return Eigen::ArrayXXd::Ones(out.rows(), out.cols());
    }
}

void check_normalization(const Normalization& norm, int dim, const char* what)
{
    if (norm.mean.size() != dim || norm.scale.size() != dim)
        throw InvalidArgument(std::string(what) + " normalization has wrong dimension");
    if (!(norm.scale.array() > 0).all() || !norm.scale.allFinite() || !norm.mean.allFinite())
        throw InvalidArgument(std::string(what) + " normalization scales must be finite and > 0");
}

struct Gradients
{
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

// Loss and gradients in normalized space for already-normalized data.
double backprop(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                Gradients* grads)
{
    const auto n_layers = layers.size();
    std::vector<Eigen::MatrixXd> acts(n_layers + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        acts[l + 1].noalias() = layers[l].weights * acts[l];
        acts[l + 1].colwise() += layers[l].biases;
        activate(acts[l + 1], layers[l].activation);
    }
    const Eigen::MatrixXd residual = acts.back() - y;
    const double count = static_cast<double>(residual.size());
    const double value = residual.squaredNorm() / count;
    if (grads == nullptr)
        return value;

    grads->weights.resize(n_layers);
    grads->biases.resize(n_layers);
    Eigen::MatrixXd delta = (2.0 / count) * residual;
    for (std::size_t l = n_layers; l-- > 0;) {
        delta.array() *= activation_slope(acts[l + 1], layers[l].activation);
        grads->weights[l].noalias() = delta * acts[l].transpose();
        grads->biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd prev = layers[l].weights.transpose() * delta;
            delta.swap(prev);
        }
    }
    return value;
}

Eigen::MatrixXd normalize(const Eigen::Ref<const Eigen::MatrixXd>& raw, const Normalization& norm)
{
    return (raw.colwise() - norm.mean).array().colwise() / norm.scale.array();
}

} // namespace

Normalization Normalization::identity(int dim)
{
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

NeuralNet::NeuralNet(std::vector<DenseLayer> layers, Normalization input, Normalization output)
    : layers_(std::move(layers)), input_norm_(std::move(input)), output_norm_(std::move(output))
{
    if (layers_.empty())
        throw InvalidArgument("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.weights.rows() != layer.biases.size())
            throw InvalidArgument("layer " + std::to_string(l) + ": bias size does not match weights");
        if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
            throw InvalidArgument("layer " + std::to_string(l) + ": input width does not match previous layer");
        if (layer.weights.rows() > kMaxWidth || layer.weights.cols() > kMaxWidth)
            throw InvalidArgument("layer " + std::to_string(l) + " wider than " + std::to_string(kMaxWidth));
    }
    if (layers_.back().activation != Activation::kIdentity)
        throw InvalidArgument("final layer must be linear");
    check_normalization(input_norm_, input_dim(), "input");
    check_normalization(output_norm_, output_dim(), "output");
}

NeuralNet NeuralNet::make(std::span<const int> dims, Activation hidden, std::uint64_t seed)
{
    if (dims.size() < 2)
        throw InvalidArgument("network needs input and output dimensions");
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        if (fan_in <= 0 || fan_out <= 0)
            throw InvalidArgument("layer dimensions must be positive");
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        DenseLayer layer;
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
            for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
                layer.weights(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
        layer.biases = Eigen::VectorXd::Zero(fan_out);
        layer.activation = (l + 2 == dims.size()) ? Activation::kIdentity : hidden;
        layers.push_back(std::move(layer));
    }
    return NeuralNet(std::move(layers), Normalization::identity(dims.front()), Normalization::identity(dims.back()));
}

int NeuralNet::input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols()); }

int NeuralNet::output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows()); }

NeuralNet NeuralNet::with_normalization(Normalization input, Normalization output) const
{
    return NeuralNet(layers_, std::move(input), std::move(output));
}

Eigen::VectorXd NeuralNet::forward(const Eigen::Ref<const Eigen::VectorXd>& input) const
{
    if (empty())
        throw InvalidArgument("forward on an empty network");
    if (input.size() != input_dim())
        throw InvalidArgument("input has " + std::to_string(input.size()) + " features, network expects " +
                              std::to_string(input_dim()));
    Buffer a = (input - input_norm_.mean).cwiseQuotient(input_norm_.scale);
    Buffer z;
    for (const auto& layer : layers_) {
        z.noalias() = layer.weights * a;
        z += layer.biases;
        activate(z, layer.activation);
        a.swap(z);
    }
    return a.cwiseProduct(output_norm_.scale) + output_norm_.mean;
}

double NeuralNet::forward_scalar(std::span<const double> input) const
{
    if (empty() || output_dim() != 1)
        throw InvalidArgument("forward_scalar needs a single-output network");
    if (static_cast<int>(input.size()) != input_dim())
        throw InvalidArgument("input has " + std::to_string(input.size()) + " features, network expects " +
                              std::to_string(input_dim()));
    const Eigen::Map<const Eigen::VectorXd> raw(input.data(), static_cast<Eigen::Index>(input.size()));
    Buffer a = (raw - input_norm_.mean).cwiseQuotient(input_norm_.scale);
    Buffer z;
    for (const auto& layer : layers_) {
        z.noalias() = layer.weights * a;
        z += layer.biases;
        activate(z, layer.activation);
        a.swap(z);
    }
    return a[0] * output_norm_.scale[0] + output_norm_.mean[0];
}

Eigen::MatrixXd NeuralNet::forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const
{
    if (inputs.rows() != input_dim())
        throw InvalidArgument("batch has wrong feature count");
    Eigen::MatrixXd a = normalize(inputs, input_norm_);
    for (const auto& layer : layers_) {
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.biases;
        activate(z, layer.activation);
        a.swap(z);
    }
    return (a.array().colwise() * output_norm_.scale.array()).colwise() + output_norm_.mean.array();
}

std::size_t NeuralNet::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& layer : layers_)
        n += static_cast<std::size_t>(layer.weights.size() + layer.biases.size());
    return n;
}

Eigen::VectorXd NeuralNet::parameters() const
{
    Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index offset = 0;
    for (const auto& layer : layers_) {
        theta.segment(offset, layer.weights.size()) = layer.weights.reshaped();
        offset += layer.weights.size();
        theta.segment(offset, layer.biases.size()) = layer.biases;
        offset += layer.biases.size();
    }
    return theta;
}

void NeuralNet::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta)
{
    if (theta.size() != static_cast<Eigen::Index>(parameter_count()))
        throw InvalidArgument("parameter vector has wrong length");
    Eigen::Index offset = 0;
    for (auto& layer : layers_) {
        layer.weights.reshaped() = theta.segment(offset, layer.weights.size());
        offset += layer.weights.size();
        layer.biases = theta.segment(offset, layer.biases.size());
        offset += layer.biases.size();
    }
}

bool NeuralNet::operator==(const NeuralNet& other) const
{
    if (layers_.size() != other.layers_.size())
        return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& a = layers_[l];
        const auto& b = other.layers_[l];
        if (a.activation != b.activation || a.weights.rows() != b.weights.rows() ||
            a.weights.cols() != b.weights.cols() || a.weights != b.weights || a.biases != b.biases)
            return false;
    }
    return input_norm_.mean == other.input_norm_.mean && input_norm_.scale == other.input_norm_.scale &&
           output_norm_.mean == other.output_norm_.mean && output_norm_.scale == other.output_norm_.scale;
}

Eigen::VectorXd forward(const NeuralNet& net, const Eigen::Ref<const Eigen::VectorXd>& input)
{
    return net.forward(input);
}

std::pair<double, Eigen::VectorXd> loss_and_gradient(const NeuralNet& net, const Dataset& batch)
{
    const Eigen::MatrixXd x = normalize(batch.inputs, net.input_norm());
    const Eigen::MatrixXd y = normalize(batch.targets, net.output_norm());
    Gradients g;
    const double value = backprop(net.layers(), x, y, &g);
    Eigen::VectorXd grad(static_cast<Eigen::Index>(net.parameter_count()));
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        grad.segment(offset, g.weights[l].size()) = g.weights[l].reshaped();
        offset += g.weights[l].size();
        grad.segment(offset, g.biases[l].size()) = g.biases[l];
        offset += g.biases[l].size();
    }
    return {value, grad};
}

double loss(const NeuralNet& net, const Dataset& batch)
{
    return backprop(net.layers(), normalize(batch.inputs, net.input_norm()), normalize(batch.targets, net.output_norm()),
                    nullptr);
}

Normalization fit_normalization(const Eigen::Ref<const Eigen::MatrixXd>& samples)
{
    if (samples.cols() == 0)
        throw InvalidArgument("cannot fit normalization to an empty sample set");
    Normalization norm;
    norm.mean = samples.rowwise().mean();
    const Eigen::MatrixXd centered = samples.colwise() - norm.mean;
    norm.scale = (centered.rowwise().squaredNorm() / static_cast<double>(samples.cols())).cwiseSqrt();
    for (Eigen::Index k = 0; k < norm.scale.size(); ++k)
        if (!(norm.scale[k] > 1e-12 * std::max(1.0, std::abs(norm.mean[k]))))
            norm.scale[k] = 1.0;
    return norm;
}

void TrainConfig::validate() const
{
    if (!(learning_rate > 0) || !(final_learning_rate > 0) || batch_size <= 0 || epochs <= 0 ||
        early_stop_patience <= 0)
        throw InvalidArgument("training configuration values must be positive");
    if (!(validation_fraction > 0 && validation_fraction <= 0.5))
        throw InvalidArgument("validation_fraction must lie in (0, 0.5]");
}

TrainResult train(const NeuralNet& initial, const Dataset& data, const TrainConfig& cfg)
{
    cfg.validate();
    if (initial.empty())
        throw InvalidArgument("cannot train an empty network");
    if (data.size() == 0)
        throw InvalidArgument("training dataset is empty");
    if (data.inputs.rows() != initial.input_dim() || data.targets.rows() != initial.output_dim() ||
        data.targets.cols() != data.inputs.cols())
        throw InvalidArgument("dataset shape does not match the network");
    if (!data.inputs.allFinite() || !data.targets.allFinite())
        throw NumericalError("training dataset contains non-finite values");

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    shuffle(order, rng);

    const auto n_total = static_cast<Eigen::Index>(order.size());
    Eigen::Index n_val = static_cast<Eigen::Index>(std::floor(cfg.validation_fraction * static_cast<double>(n_total)));
    if (n_total >= 2)
        n_val = std::clamp<Eigen::Index>(n_val, 1, n_total - 1);
    else
        n_val = 0;
    const Eigen::Index n_train = n_total - n_val;

    const auto gather = [&](Eigen::Index begin, Eigen::Index count) {
        Dataset out{Eigen::MatrixXd(data.inputs.rows(), count), Eigen::MatrixXd(data.targets.rows(), count)};
        for (Eigen::Index k = 0; k < count; ++k) {
            out.inputs.col(k) = data.inputs.col(order[static_cast<std::size_t>(begin + k)]);
            out.targets.col(k) = data.targets.col(order[static_cast<std::size_t>(begin + k)]);
        }
        return out;
    };
    const Dataset train_set = gather(0, n_train);
    const Dataset val_set = n_val > 0 ? gather(n_train, n_val) : train_set;

    NeuralNet net = initial;
    if (cfg.fit_normalization)
        net = net.with_normalization(fit_normalization(train_set.inputs), fit_normalization(train_set.targets));

    const Eigen::MatrixXd x_train = normalize(train_set.inputs, net.input_norm());
    const Eigen::MatrixXd y_train = normalize(train_set.targets, net.output_norm());
    const Eigen::MatrixXd x_val = normalize(val_set.inputs, net.input_norm());
    const Eigen::MatrixXd y_val = normalize(val_set.targets, net.output_norm());

    std::vector<DenseLayer> layers = net.layers();
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    for (const auto& layer : layers) {
        m_w.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        v_w.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        m_b.push_back(Eigen::VectorXd::Zero(layer.biases.size()));
        v_b.push_back(Eigen::VectorXd::Zero(layer.biases.size()));
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double adam_eps = 1e-8;
    long step = 0;

    TrainResult result;
    result.net = net;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
    std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});
    const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n_train);
    Eigen::MatrixXd xb(x_train.rows(), batch);
    Eigen::MatrixXd yb(y_train.rows(), batch);
    Gradients g;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double progress = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 1.0;
        const double lr = cfg.final_learning_rate +
                          0.5 * (cfg.learning_rate - cfg.final_learning_rate) * (1.0 + std::cos(M_PI * progress));
        shuffle(batch_order, rng);
        double epoch_loss = 0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n_train; start += batch) {
            const Eigen::Index count = std::min(batch, n_train - start);
            xb.resize(Eigen::NoChange, count);
            yb.resize(Eigen::NoChange, count);
            for (Eigen::Index k = 0; k < count; ++k) {
                xb.col(k) = x_train.col(batch_order[static_cast<std::size_t>(start + k)]);
                yb.col(k) = y_train.col(batch_order[static_cast<std::size_t>(start + k)]);
            }
            const double value = backprop(layers, xb, yb, &g);
            if (!std::isfinite(value))
                throw NumericalError("training loss became non-finite at epoch " + std::to_string(epoch) +
                                     ", batch offset " + std::to_string(start) + " (try a lower learning rate)");
            epoch_loss += value * static_cast<double>(count);
            seen += count;

            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < layers.size(); ++l) {
                m_w[l] = beta1 * m_w[l] + (1 - beta1) * g.weights[l];
                v_w[l] = beta2 * v_w[l] + (1 - beta2) * g.weights[l].cwiseAbs2();
                m_b[l] = beta1 * m_b[l] + (1 - beta1) * g.biases[l];
                v_b[l] = beta2 * v_b[l] + (1 - beta2) * g.biases[l].cwiseAbs2();
                layers[l].weights.array() -=
                    lr * (m_w[l].array() / c1) / ((v_w[l].array() / c2).sqrt() + adam_eps);
                layers[l].biases.array() -= lr * (m_b[l].array() / c1) / ((v_b[l].array() / c2).sqrt() + adam_eps);
            }
        }
        const double val_loss = backprop(layers, x_val, y_val, nullptr);
        if (!std::isfinite(val_loss))
            throw NumericalError("validation loss became non-finite at epoch " + std::to_string(epoch));
        result.history.push_back({epoch_loss / static_cast<double>(seen), val_loss});
        if (val_loss < best_val) {
            best_val = val_loss;
            since_best = 0;
            result.best_epoch = epoch;
            result.net = NeuralNet(layers, net.input_norm(), net.output_norm());
        } else if (++since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Binary format, little-endian throughout:
//   "PCNN" | u8 version | 3 reserved bytes
//   u32 input_dim | u32 output_dim | u32 layer_count
//   f64 input_mean[in] | f64 input_scale[in] | f64 output_mean[out] | f64 output_scale[out]
//   per layer: u32 rows | u32 cols | u32 activation | f64 weights[rows*cols] (row-major) | f64 biases[rows]

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'C', 'N', 'N'};
constexpr std::uint8_t kFormatVersion = 1;

class Writer
{
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u32(std::uint32_t v)
    {
        std::array<char, 4> bytes{};
        for (int k = 0; k < 4; ++k)
            bytes[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xffU);
        out_.write(bytes.data(), bytes.size());
    }

    void f64(double v)
    {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        std::array<char, 8> bytes{};
        for (int k = 0; k < 8; ++k)
            bytes[static_cast<std::size_t>(k)] = static_cast<char>((bits >> (8 * k)) & 0xffU);
        out_.write(bytes.data(), bytes.size());
    }

    template <typename Derived>
    void vec(const Eigen::DenseBase<Derived>& v)
    {
        for (Eigen::Index k = 0; k < v.size(); ++k)
            f64(v.derived().coeff(k));
    }

private:
    std::ostream& out_;
};

class Reader
{
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    void bytes(char* dst, std::size_t n)
    {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw ParseError(source_ + ": truncated network file");
    }

    std::uint32_t u32()
    {
        std::array<unsigned char, 4> b{};
        bytes(reinterpret_cast<char*>(b.data()), b.size());
        std::uint32_t v = 0;
        for (int k = 3; k >= 0; --k)
            v = (v << 8) | b[static_cast<std::size_t>(k)];
        return v;
    }

    double f64()
    {
        std::array<unsigned char, 8> b{};
        bytes(reinterpret_cast<char*>(b.data()), b.size());
        std::uint64_t v = 0;
        for (int k = 7; k >= 0; --k)
            v = (v << 8) | b[static_cast<std::size_t>(k)];
        return std::bit_cast<double>(v);
    }

    Eigen::VectorXd vec(std::uint32_t n)
    {
        Eigen::VectorXd v(n);
        for (std::uint32_t k = 0; k < n; ++k)
            v[k] = f64();
        return v;
    }

    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
};

} // namespace

void save(const NeuralNet& net, const std::filesystem::path& path)
{
    if (net.empty())
        throw InvalidArgument("refusing to save an empty network");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    const std::array<char, 4> version = {static_cast<char>(kFormatVersion), 0, 0, 0};
    out.write(version.data(), version.size());

    Writer w(out);
    w.u32(static_cast<std::uint32_t>(net.input_dim()));
    w.u32(static_cast<std::uint32_t>(net.output_dim()));
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    w.vec(net.input_norm().mean);
    w.vec(net.input_norm().scale);
    w.vec(net.output_norm().mean);
    w.vec(net.output_norm().scale);
    for (const auto& layer : net.layers()) {
        w.u32(static_cast<std::uint32_t>(layer.weights.rows()));
        w.u32(static_cast<std::uint32_t>(layer.weights.cols()));
        w.u32(static_cast<std::uint32_t>(layer.activation));
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
                w.f64(layer.weights(i, j));
        w.vec(layer.biases);
    }
    if (!out)
        throw Error("failed writing " + path.string());
}

NeuralNet load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingArtifact("network file " + path.string() + " not found", "");
    Reader r(in, path.string());

    std::array<char, 4> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kMagic)
        throw ParseError(path.string() + ": not a network file (bad magic)");
    std::array<char, 4> header{};
    r.bytes(header.data(), header.size());
    const auto version = static_cast<std::uint8_t>(header[0]);
    if (version != kFormatVersion)
        throw VersionError(path.string() + ": unsupported network format version " + std::to_string(version) +
                           " (expected " + std::to_string(kFormatVersion) + ")");

    const std::uint32_t in_dim = r.u32();
    const std::uint32_t out_dim = r.u32();
    const std::uint32_t n_layers = r.u32();
    constexpr std::uint32_t kLimit = NeuralNet::kMaxWidth;
    if (in_dim == 0 || out_dim == 0 || in_dim > kLimit || out_dim > kLimit || n_layers == 0 || n_layers > 64)
        throw ParseError(path.string() + ": implausible network header");

    Normalization input{r.vec(in_dim), r.vec(in_dim)};
    Normalization output{r.vec(out_dim), r.vec(out_dim)};
    std::vector<DenseLayer> layers;
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        const std::uint32_t act = r.u32();
        if (rows == 0 || cols == 0 || rows > kLimit || cols > kLimit || act > 2)
            throw ParseError(path.string() + ": implausible layer " + std::to_string(l));
        DenseLayer layer;
        layer.activation = static_cast<Activation>(act);
        layer.weights.resize(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j)
                layer.weights(i, j) = r.f64();
        layer.biases = r.vec(rows);
        layers.push_back(std::move(layer));
    }
    char extra = 0;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw ParseError(path.string() + ": trailing bytes after network data");
    try {
        return NeuralNet(std::move(layers), std::move(input), std::move(output));
    } catch (const InvalidArgument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace powercap
