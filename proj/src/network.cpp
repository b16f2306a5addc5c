#include "invkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace invkit {

namespace {

Interval activate(Activation act, const Interval& z)
{
    switch (act) {
    case Activation::relu: return relu(z);
    case Activation::tanh: return tanh(z);
    case Activation::sigmoid: return sigmoid(z);
    case Activation::identity: return z;
    }
    return z;
}

double activate(Activation act, double z)
{
    switch (act) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::identity: return z;
    }
    return z;
}

IntervalVector thin_vector(const Eigen::VectorXd& v) { return IntervalVector::thin(v); }

// Bounds on phi(z) - slope * z over [l, u] for a smooth sigmoidal phi,
// using the points where phi'(z) = slope.
Interval smooth_offset_range(Activation act, const Interval& pre, double slope)
{
    const Interval a(slope);
    const auto g = [&](const Interval& z) { return activate(act, z) - a * z; };
    Interval range = hull(g(Interval(pre.lo())), g(Interval(pre.hi())));
    try {
        std::vector<Interval> critical;
        if (act == Activation::tanh) {
            if (slope <= 0.0) return range;
            const Interval s = sqrt(Interval(std::max(0.0, (Interval(1.0) - a).lo()), (Interval(1.0) - a).hi()));
            const Interval z = atanh(s);
            critical = {z, -z};
        } else {
            if (slope <= 0.0) return range;
            const Interval disc = Interval(1.0) - Interval(4.0) * a;
            const Interval root = sqrt(Interval(std::max(0.0, disc.lo()), std::max(0.0, disc.hi())));
            for (const Interval& s : {(Interval(1.0) + root) * Interval(0.5), (Interval(1.0) - root) * Interval(0.5)}) {
                critical.push_back(log(s / (Interval(1.0) - s)));
            }
        }
        for (const Interval& z : critical) {
            if (z.hi() < pre.lo() || z.lo() > pre.hi()) continue;
            const Interval clipped(std::max(z.lo(), pre.lo()), std::min(z.hi(), pre.hi()));
            range = hull(range, g(clipped));
        }
        return range;
    } catch (const DomainError&) {
        // Critical point not enclosable; bound g by its natural extension.
        return g(pre);
    }
}

}  // namespace

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view tag)
{
    if (tag == "relu") return Activation::relu;
    if (tag == "tanh") return Activation::tanh;
    if (tag == "sigmoid") return Activation::sigmoid;
    if (tag == "identity" || tag == "linear") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + std::string(tag) + "' (expected relu|tanh|sigmoid|identity)");
}

FeedforwardNetwork::FeedforwardNetwork(std::vector<Layer> layers) : layers_(std::move(layers))
{
    if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        const std::string where = "layer " + std::to_string(i) + ": ";
        if (l.weights.rows() != l.bias.size()) throw std::invalid_argument(where + "bias length does not match weight rows");
        if (l.weights.rows() == 0 || l.weights.cols() == 0) throw std::invalid_argument(where + "empty weight matrix");
        if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows()) {
            throw std::invalid_argument(where + "weight columns do not match previous layer width");
        }
        if (!l.weights.allFinite() || !l.bias.allFinite()) throw std::invalid_argument(where + "non-finite weight or bias");
    }
    if (layers_.back().activation != Activation::identity) {
        throw std::invalid_argument("last layer must have identity activation");
    }
}

FeedforwardNetwork network_from_json_text(std::string_view text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("version", 0) != 1) throw std::invalid_argument("network JSON: unsupported or missing version (expected 1)");
        std::vector<Layer> layers;
        for (const auto& jl : j.at("layers")) {
            const auto rows = jl.at("weights").get<std::vector<std::vector<double>>>();
            const auto bias = jl.at("bias").get<std::vector<double>>();
            Layer layer;
            const auto r = static_cast<Eigen::Index>(rows.size());
            const auto c = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
            layer.weights.resize(r, c);
            for (Eigen::Index i = 0; i < r; ++i) {
                if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c) {
                    throw std::invalid_argument("network JSON: ragged weight matrix");
                }
                for (Eigen::Index k = 0; k < c; ++k) layer.weights(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            }
            layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
            layer.activation = parse_activation(jl.at("activation").get<std::string>());
            layers.push_back(std::move(layer));
        }
        return FeedforwardNetwork(std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("network JSON: ") + e.what());
    }
}

FeedforwardNetwork load_network(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open network file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return network_from_json_text(buffer.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::string network_to_json(const FeedforwardNetwork& net)
{
    nlohmann::json j;
    j["version"] = 1;
    j["layers"] = nlohmann::json::array();
    for (const Layer& l : net.layers()) {
        nlohmann::json jl;
        auto rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
            auto row = nlohmann::json::array();
            for (Eigen::Index k = 0; k < l.weights.cols(); ++k) row.push_back(l.weights(i, k));
            rows.push_back(row);
        }
        jl["weights"] = rows;
        jl["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        jl["activation"] = std::string(to_string(l.activation));
        j["layers"].push_back(jl);
    }
    return j.dump(2);
}

Eigen::VectorXd forward(const FeedforwardNetwork& net, const Eigen::VectorXd& x)
{
    if (static_cast<std::size_t>(x.size()) != net.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    Eigen::VectorXd h = x;
    for (const Layer& l : net.layers()) {
        Eigen::VectorXd z = l.weights * h + l.bias;
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activate(l.activation, z(i));
        h = std::move(z);
    }
    return h;
}

std::vector<IntervalVector> preactivation_bounds(const FeedforwardNetwork& net, const IntervalVector& box)
{
    if (box.size() != net.input_dim()) throw std::invalid_argument("interval_forward: input dimension mismatch");
    std::vector<IntervalVector> out;
    out.reserve(net.layers().size());
    IntervalVector h = box;
    // Pending affine map M h + c accumulated over identity layers.
    IntervalMatrix M;
    IntervalVector c;
    bool fresh = true;
    for (const Layer& l : net.layers()) {
        if (fresh) {
            M = IntervalMatrix(l.weights);
            c = thin_vector(l.bias);
        } else {
            M = matmul(l.weights, M);
            c = matvec(l.weights, c) + thin_vector(l.bias);
        }
        IntervalVector pre = matvec(M, h) + c;
        if (l.activation != Activation::identity) {
            IntervalVector post(pre.size());
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = activate(l.activation, pre[i]);
            h = std::move(post);
            fresh = true;
        } else {
            fresh = false;
        }
        out.push_back(std::move(pre));
    }
    return out;
}

IntervalVector interval_forward(const FeedforwardNetwork& net, const IntervalVector& box)
{
    return preactivation_bounds(net, box).back();
}

NeuronRelaxation relax_neuron(Activation act, const Interval& pre)
{
    const double l = pre.lo();
    const double u = pre.hi();
    switch (act) {
    case Activation::identity: return {1.0, 0.0, 0.0};
    case Activation::relu: {
        if (l >= 0.0) return {1.0, 0.0, 0.0};
        if (u <= 0.0) return {0.0, 0.0, 0.0};
        const double slope = std::clamp(u / (u - l), 0.0, 1.0);
        // relu(z) - slope*z is convex with minimum 0 at z = 0; its maximum
        // sits at an endpoint.
        const Interval a(slope);
        const Interval at_l = -(a * Interval(l));
        const Interval at_u = (Interval(1.0) - a) * Interval(u);
        return {slope, 0.0, std::max(at_l.hi(), at_u.hi())};
    }
    case Activation::tanh:
    case Activation::sigmoid: {
        const double max_slope = act == Activation::tanh ? 1.0 : 0.25;
        double slope = 0.0;
        if (l == u) {
            const double t = activate(act, l);
            slope = act == Activation::tanh ? 1.0 - t * t : t * (1.0 - t);
        } else {
            slope = (activate(act, u) - activate(act, l)) / (u - l);
        }
        slope = std::clamp(slope, 0.0, max_slope);
        const Interval range = smooth_offset_range(act, pre, slope);
        return {slope, range.lo(), range.hi()};
    }
    }
    throw std::invalid_argument("relax_neuron: unknown activation");
}

AffineRelaxation crown_affine_bounds(const FeedforwardNetwork& net, const IntervalVector& region)
{
    const auto pre = preactivation_bounds(net, region);
    const auto& layers = net.layers();
    IntervalMatrix lam(layers.back().weights);
    IntervalVector d = thin_vector(layers.back().bias);
    for (std::size_t k = layers.size() - 1; k-- > 0;) {
        const Layer& l = layers[k];
        if (l.activation != Activation::identity) {
            for (std::size_t j = 0; j < pre[k].size(); ++j) {
                const NeuronRelaxation nr = relax_neuron(l.activation, pre[k][j]);
                if (nr.lo != 0.0 || nr.hi != 0.0) {
                    const Interval beta(nr.lo, nr.hi);
                    for (std::size_t r = 0; r < lam.rows(); ++r) d[r] = d[r] + lam(r, j) * beta;
                }
                if (nr.slope != 1.0) {
                    for (std::size_t r = 0; r < lam.rows(); ++r) lam(r, j) = nr.slope * lam(r, j);
                }
            }
        }
        d = d + matvec(lam, thin_vector(l.bias));
        lam = matmul(lam, l.weights);
    }
    AffineRelaxation rel;
    rel.C = lam.midpoint();
    // Slope uncertainty from rounding is moved into the offsets.
    const IntervalVector total = d + matvec(lam - rel.C, region);
    rel.d_lo = total.lower();
    rel.d_hi = total.upper();
    rel.region = region;
    return rel;
}

AffineRelaxation ibp_relaxation(const FeedforwardNetwork& net, const IntervalVector& region)
{
    const IntervalVector out = interval_forward(net, region);
    return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.output_dim()), static_cast<Eigen::Index>(net.input_dim())),
            out.lower(), out.upper(), region};
}

IntervalVector nn_inclusion(const AffineRelaxation& rel, const IntervalVector& box)
{
    if (box.size() != rel.region.size()) throw std::invalid_argument("nn_inclusion: dimension mismatch");
    if (!rel.region.contains(box)) {
        std::ostringstream os;
        os << "nn_inclusion: box " << box << " escapes relaxation region " << rel.region;
        throw LocalizationError(os.str());
    }
    return matvec(rel.C, box) + IntervalVector(rel.d_lo, rel.d_hi);
}

FeedforwardNetwork build_linear_relu_net(const Eigen::MatrixXd& K)
{
    const Eigen::Index p = K.rows();
    const Eigen::Index n = K.cols();
    Layer hidden;
    hidden.weights.resize(2 * p, n);
    hidden.weights << K, -K;
    hidden.bias = Eigen::VectorXd::Zero(2 * p);
    hidden.activation = Activation::relu;
    Layer out;
    out.weights.resize(p, 2 * p);
    out.weights << Eigen::MatrixXd::Identity(p, p), -Eigen::MatrixXd::Identity(p, p);
    out.bias = Eigen::VectorXd::Zero(p);
    out.activation = Activation::identity;
    return FeedforwardNetwork({hidden, out});
}

FeedforwardNetwork compose_input_transform(const FeedforwardNetwork& net, const Eigen::MatrixXd& Tinv)
{
    const auto n = static_cast<Eigen::Index>(net.input_dim());
    if (Tinv.rows() != n || Tinv.cols() != n) throw std::invalid_argument("compose_input_transform: Tinv must be n x n");
    std::vector<Layer> layers;
    layers.push_back(Layer{Tinv, Eigen::VectorXd::Zero(n), Activation::identity});
    layers.insert(layers.end(), net.layers().begin(), net.layers().end());
    return FeedforwardNetwork(std::move(layers));
}

}  // namespace invkit
