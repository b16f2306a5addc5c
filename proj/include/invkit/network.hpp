#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "invkit/interval.hpp"

namespace invkit {

/// A box left the region a localized bound is valid on.
class LocalizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Activation { relu, tanh, sigmoid, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view tag);

struct Layer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    Activation activation = Activation::identity;
};

/// u = W_k xi_k + b_k with xi_{i+1} = phi_i(W_i xi_i + b_i). The last layer
/// has identity activation.
class FeedforwardNetwork {
public:
    FeedforwardNetwork() = default;
    explicit FeedforwardNetwork(std::vector<Layer> layers);

    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t input_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weights.cols()); }
    std::size_t output_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weights.rows()); }

private:
    std::vector<Layer> layers_;
};

FeedforwardNetwork load_network(const std::filesystem::path& path);
FeedforwardNetwork network_from_json_text(std::string_view text);
std::string network_to_json(const FeedforwardNetwork& net);

Eigen::VectorXd forward(const FeedforwardNetwork& net, const Eigen::VectorXd& x);

/// Interval bound propagation. Runs of identity-activation layers are
/// multiplied out (in interval arithmetic) before being applied to the box.
IntervalVector interval_forward(const FeedforwardNetwork& net, const IntervalVector& box);

/// Pre-activation boxes of every layer under the same propagation.
std::vector<IntervalVector> preactivation_bounds(const FeedforwardNetwork& net, const IntervalVector& box);

/// slope * z + lo <= phi(z) <= slope * z + hi on the pre-activation interval.
struct NeuronRelaxation {
    double slope = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

NeuronRelaxation relax_neuron(Activation act, const Interval& pre);

/// C x + d_lo <= N(x) <= C x + d_hi for x in region.
struct AffineRelaxation {
    Eigen::MatrixXd C;
    Eigen::VectorXd d_lo;
    Eigen::VectorXd d_hi;
    IntervalVector region;
};

AffineRelaxation crown_affine_bounds(const FeedforwardNetwork& net, const IntervalVector& region);
/// C = 0 and d = IBP bounds over the region.
AffineRelaxation ibp_relaxation(const FeedforwardNetwork& net, const IntervalVector& region);

/// C+ x_lo + C- x_hi + d_lo and its upper counterpart. Throws
/// LocalizationError when box is not inside rel.region.
IntervalVector nn_inclusion(const AffineRelaxation& rel, const IntervalVector& box);

/// relu(Kx) - relu(-Kx) as a one-hidden-layer network.
FeedforwardNetwork build_linear_relu_net(const Eigen::MatrixXd& K);

/// N'(y) = N(Tinv y) with Tinv as a prepended identity-activation layer.
FeedforwardNetwork compose_input_transform(const FeedforwardNetwork& net, const Eigen::MatrixXd& Tinv);

}  // namespace invkit
