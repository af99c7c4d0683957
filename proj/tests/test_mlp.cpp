#include "powercap/error.hpp"
#include "powercap/mlp.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace powercap;

namespace {

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("powercap_test_mlp_" + name);
}

Dataset random_dataset(int in, int out, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Dataset d{Eigen::MatrixXd(in, n), Eigen::MatrixXd(out, n)};
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < in; ++r)
            d.inputs(r, c) = 3.0 * g(rng) + r;
        for (int r = 0; r < out; ++r)
            d.targets(r, c) = std::sin(d.inputs(0, c)) + 0.5 * g(rng);
    }
    return d;
}

NeuralNet with_random_norms(const NeuralNet& net, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mean(-2, 2), scale(0.5, 3);
    Normalization in{Eigen::VectorXd(net.input_dim()), Eigen::VectorXd(net.input_dim())};
    Normalization out{Eigen::VectorXd(net.output_dim()), Eigen::VectorXd(net.output_dim())};
    for (int k = 0; k < net.input_dim(); ++k) {
        in.mean[k] = mean(rng);
        in.scale[k] = scale(rng);
    }
    for (int k = 0; k < net.output_dim(); ++k) {
        out.mean[k] = mean(rng);
        out.scale[k] = scale(rng);
    }
    return net.with_normalization(in, out);
}

// Worst componentwise relative error of the analytic gradient against
// central differences with step h.
double gradient_check(const NeuralNet& net, const Dataset& d, double h = 1e-5)
{
    const auto [value, grad] = loss_and_gradient(net, d);
    (void)value;
    Eigen::VectorXd theta = net.parameters();
    NeuralNet probe = net;
    double worst = 0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double saved = theta[k];
        theta[k] = saved + h;
        probe.set_parameters(theta);
        const double up = loss(probe, d);
        theta[k] = saved - h;
        probe.set_parameters(theta);
        const double down = loss(probe, d);
        theta[k] = saved;
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
        worst = std::max(worst, std::abs(fd - grad[k]) / denom);
    }
    return worst;
}

} // namespace

TEST(Forward, IdentityLayerPassesInputThrough)
{
    DenseLayer layer{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::kIdentity};
    const NeuralNet net({layer}, Normalization::identity(3), Normalization::identity(3));
    const Eigen::Vector3d x(0.3, -1.2, 7.0);
    EXPECT_EQ(forward(net, x), x);
}

TEST(Forward, ZeroWeightsGiveDenormalizedBias)
{
    DenseLayer layer{Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Constant(1, 0.75), Activation::kIdentity};
    Normalization out{Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 4.0)};
    const NeuralNet net({layer}, Normalization::identity(2), out);
    EXPECT_DOUBLE_EQ(forward(net, Eigen::Vector2d(5, -3))[0], 0.75 * 4.0 + 2.0);
}

TEST(Forward, ScalarAndBatchPathsAgree)
{
    const std::vector<int> dims{7, 64, 64, 1};
    const NeuralNet net = with_random_norms(NeuralNet::make(dims, Activation::kTanh, 9), 10);
    const Dataset d = random_dataset(7, 1, 20, 11);
    const Eigen::MatrixXd batch = net.forward_batch(d.inputs);
    for (Eigen::Index c = 0; c < d.size(); ++c) {
        const Eigen::VectorXd col = d.inputs.col(c);
        EXPECT_NEAR(net.forward(col)[0], batch(0, c), 1e-13);
        EXPECT_NEAR(net.forward_scalar({col.data(), 7}), batch(0, c), 1e-13);
    }
}

TEST(Forward, RejectsDimensionMismatch)
{
    const std::vector<int> dims{3, 4, 1};
    const NeuralNet net = NeuralNet::make(dims, Activation::kTanh, 1);
    EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(4)), InvalidArgument);
    const std::array<double, 2> two{1, 2};
    EXPECT_THROW(net.forward_scalar(two), InvalidArgument);
}

TEST(NeuralNet, RejectsIncompatibleLayers)
{
    DenseLayer a{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4), Activation::kTanh};
    DenseLayer b{Eigen::MatrixXd::Zero(1, 5), Eigen::VectorXd::Zero(1), Activation::kIdentity};
    EXPECT_THROW(NeuralNet({a, b}, Normalization::identity(3), Normalization::identity(1)), InvalidArgument);
    DenseLayer last{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1), Activation::kTanh};
    EXPECT_THROW(NeuralNet({a, last}, Normalization::identity(3), Normalization::identity(1)), InvalidArgument);
    DenseLayer ok{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1), Activation::kIdentity};
    Normalization bad{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    EXPECT_THROW(NeuralNet({a, ok}, Normalization::identity(3), bad), InvalidArgument);
}

TEST(Forward, LipschitzBoundedByWeightNorms)
{
    const std::vector<int> dims{6, 32, 32, 1};
    const NeuralNet net = with_random_norms(NeuralNet::make(dims, Activation::kTanh, 12), 13);
    double bound = net.output_norm().scale.cwiseAbs().maxCoeff() / net.input_norm().scale.cwiseAbs().minCoeff();
    for (const auto& layer : net.layers())
        bound *= layer.weights.jacobiSvd().singularValues()[0];
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd a(6), b(6);
        for (int k = 0; k < 6; ++k) {
            a[k] = 2 * g(rng);
            b[k] = a[k] + 0.1 * g(rng);
        }
        EXPECT_LE((net.forward(a) - net.forward(b)).norm(), bound * (a - b).norm() * (1 + 1e-12));
    }
}

TEST(Gradient, MatchesCentralDifferencesOnShippedArchitectures)
{
    const std::vector<std::vector<int>> shapes{{6, 32, 32, 1}, {3, 32, 32, 1}, {5, 32, 32, 1}, {7, 64, 64, 1}};
    std::uint64_t seed = 20;
    for (const auto& dims : shapes) {
        const NeuralNet net = with_random_norms(NeuralNet::make(dims, Activation::kTanh, seed), seed + 1);
        const Dataset d = random_dataset(dims.front(), 1, 16, seed + 2);
        EXPECT_LT(gradient_check(net, d), 1e-5) << dims.front() << "-" << dims[1] << "-" << dims[2] << "-1";
        seed += 10;
    }
}

TEST(Gradient, MatchesCentralDifferencesForReluAndMultiOutput)
{
    const std::vector<int> dims{4, 10, 3};
    const NeuralNet net = with_random_norms(NeuralNet::make(dims, Activation::kRelu, 30), 31);
    EXPECT_LT(gradient_check(net, random_dataset(4, 3, 12, 32)), 1e-5);
}

TEST(Train, FitsSquareOnHeldOutGrid)
{
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> u(-1, 1);
    Dataset d{Eigen::MatrixXd(1, 1000), Eigen::MatrixXd(1, 1000)};
    for (int k = 0; k < 1000; ++k) {
        d.inputs(0, k) = u(rng);
        d.targets(0, k) = d.inputs(0, k) * d.inputs(0, k);
    }
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.final_learning_rate = 1e-4;
    cfg.batch_size = 32;
    cfg.epochs = 300;
    cfg.early_stop_patience = 300;
    const std::vector<int> dims{1, 16, 1};
    const TrainResult r = train(NeuralNet::make(dims, Activation::kTanh, 41), d, cfg);
    double mse = 0;
    for (int k = 0; k <= 200; ++k) {
        const double x = -1 + k / 100.0;
        const double e = r.net.forward(Eigen::VectorXd::Constant(1, x))[0] - x * x;
        mse += e * e / 201.0;
    }
    EXPECT_LT(mse, 1e-3);
}

TEST(Train, IdenticalPairsGiveConstantPredictor)
{
    Dataset d{Eigen::MatrixXd::Constant(2, 64, 0.5), Eigen::MatrixXd::Constant(1, 64, -1.25)};
    TrainConfig cfg;
    cfg.epochs = 200;
    const std::vector<int> dims{2, 8, 1};
    const TrainResult r = train(NeuralNet::make(dims, Activation::kTanh, 50), d, cfg);
    EXPECT_LT(loss(r.net, d), 1e-8);
    EXPECT_NEAR(r.net.forward(Eigen::Vector2d(0.5, 0.5))[0], -1.25, 1e-4);
}

TEST(Train, RecoversAffineMap)
{
    Dataset d{Eigen::MatrixXd(1, 200), Eigen::MatrixXd(1, 200)};
    for (int k = 0; k < 200; ++k) {
        d.inputs(0, k) = -3 + 6.0 * k / 199.0;
        d.targets(0, k) = 2 * d.inputs(0, k) + 1;
    }
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.final_learning_rate = 1e-5;
    cfg.batch_size = 20;
    cfg.epochs = 400;
    cfg.early_stop_patience = 400;
    const std::vector<int> dims{1, 1};
    const TrainResult r = train(NeuralNet::make(dims, Activation::kIdentity, 51), d, cfg);
    EXPECT_LT(loss(r.net, d), 1e-10);
    EXPECT_NEAR(r.net.forward(Eigen::VectorXd::Constant(1, 10.0))[0], 21.0, 1e-4);
}

TEST(Train, IsDeterministicGivenSeed)
{
    const Dataset d = random_dataset(3, 1, 300, 60);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 61;
    const std::vector<int> dims{3, 8, 8, 1};
    const NeuralNet init = NeuralNet::make(dims, Activation::kTanh, 62);
    const TrainResult a = train(init, d, cfg);
    const TrainResult b = train(init, d, cfg);
    EXPECT_TRUE(a.net == b.net);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k)
        EXPECT_EQ(a.history[k].train, b.history[k].train);
}

TEST(Train, ReturnsBestValidationSnapshot)
{
    const Dataset d = random_dataset(2, 1, 200, 70);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 5e-2;
    cfg.final_learning_rate = 5e-2;
    const std::vector<int> dims{2, 16, 1};
    const TrainResult r = train(NeuralNet::make(dims, Activation::kTanh, 71), d, cfg);
    double best = INFINITY;
    for (const auto& e : r.history)
        best = std::min(best, e.validation);
    EXPECT_EQ(r.history[static_cast<std::size_t>(r.best_epoch)].validation, best);
}

TEST(Train, RejectsEmptyDatasetAndBadConfig)
{
    const std::vector<int> dims{2, 4, 1};
    const NeuralNet net = NeuralNet::make(dims, Activation::kTanh, 1);
    EXPECT_THROW(train(net, Dataset{Eigen::MatrixXd(2, 0), Eigen::MatrixXd(1, 0)}, {}), InvalidArgument);
    TrainConfig cfg;
    cfg.validation_fraction = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.validation_fraction = 0.6;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Train, DivergenceAbortsWithDiagnostic)
{
    const Dataset d = random_dataset(2, 1, 64, 80);
    TrainConfig cfg;
    cfg.learning_rate = 1e200;
    cfg.final_learning_rate = 1e200;
    cfg.epochs = 50;
    const std::vector<int> dims{2, 4, 1};
    try {
        train(NeuralNet::make(dims, Activation::kIdentity, 81), d, cfg);
        FAIL() << "expected a numerical error";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
    }
}

TEST(Serialization, RoundTripIsBitIdentical)
{
    const std::vector<int> dims{7, 64, 64, 1};
    const NeuralNet net = with_random_norms(NeuralNet::make(dims, Activation::kTanh, 90), 91);
    const auto path = temp_file("roundtrip.net");
    save(net, path);
    const NeuralNet back = load(path);
    EXPECT_TRUE(net == back);
    const Dataset d = random_dataset(7, 1, 100, 92);
    for (Eigen::Index c = 0; c < d.size(); ++c) {
        const Eigen::VectorXd x = d.inputs.col(c);
        EXPECT_EQ(std::bit_cast<std::uint64_t>(net.forward(x)[0]), std::bit_cast<std::uint64_t>(back.forward(x)[0]));
    }
    std::filesystem::remove(path);
}

TEST(Serialization, DetectsCorruptFiles)
{
    const std::vector<int> dims{3, 5, 1};
    const NeuralNet net = NeuralNet::make(dims, Activation::kRelu, 93);
    const auto path = temp_file("corrupt.net");
    save(net, path);
    std::string bytes;
    {
        std::ifstream is(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(is), {});
    }
    auto write = [&](const std::string& content) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << content;
    };

    write(bytes.substr(0, bytes.size() - 5));
    EXPECT_THROW(load(path), ParseError);

    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    write(wrong_version);
    EXPECT_THROW(load(path), VersionError);

    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    write(wrong_magic);
    try {
        load(path);
        FAIL() << "expected a parse error";
    } catch (const VersionError&) {
        FAIL() << "bad magic reported as a version error";
    } catch (const ParseError&) {
    }

    write(bytes + "junk");
    EXPECT_THROW(load(path), ParseError);

    std::filesystem::remove(path);
    EXPECT_THROW(load(path), MissingArtifact);
}
