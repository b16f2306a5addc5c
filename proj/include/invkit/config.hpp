#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invkit/embedding.hpp"
#include "invkit/oracle.hpp"
#include "invkit/paralleletope.hpp"

namespace invkit {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "equilibrium" or an explicit point.
struct PointSpec {
    bool equilibrium = false;
    Eigen::VectorXd value;
};

/// center +/- radius, or explicit corners.
struct RegionSpec {
    std::optional<PointSpec> center;
    Eigen::VectorXd radius;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

struct SetSpec {
    bool paralleletope = false;
    bool auto_transform = false;
    TransformScaling scaling = TransformScaling::unit_rows;
    std::vector<std::size_t> mode_order;  // zero-based, empty: ascending real part
    Eigen::MatrixXd T;  // explicit transform, when not auto
    RegionSpec region;  // box corners/center, or y-radius around T x*
};

struct RunConfig {
    std::filesystem::path path;
    std::filesystem::path system_path;
    std::optional<std::filesystem::path> network_path;
    Eigen::VectorXd w_lo;
    Eigen::VectorXd w_hi;
    SetSpec set;
    std::optional<RegionSpec> relaxation_region;

    Eigen::VectorXd eq_x0;  // empty: start at zero
    double eq_horizon = 100.0;
    double eq_tol = 1e-10;
    double eq_h = 0.01;

    ForwardOptions forward;
    BackwardOptions backward;
    bool run_backward = true;

    BoundaryOptions boundary;
    std::size_t trajectories = 100;
    double sim_horizon = 0.0;  // 0: forward steps times h
    std::optional<std::size_t> grid_per_dim;

    InclusionMode inclusion = InclusionMode::jacobian;
    RoundingMode rounding = RoundingMode::sound;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::size_t, std::size_t>> projections;  // zero-based

    std::string canonical;  // canonical JSON of the document
};

/// Parses a run configuration; paths are resolved against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a over the canonical config and the referenced files.
std::string config_hash(const RunConfig& cfg);

/// Everything a command needs, resolved from a config.
struct Pipeline {
    RunConfig cfg;
    std::shared_ptr<const Dynamics> dynamics;
    std::shared_ptr<const FeedforwardNetwork> network;
    std::shared_ptr<const ClosedLoopSystem> sys;
    std::optional<Eigen::VectorXd> x_star;
    std::optional<TransformChoice> choice;
    std::optional<IntervalVector> region;  // relaxation region in x
    Paralleletope set;                     // T = I for boxes
    std::shared_ptr<const TransformedSystem> ts;  // set only for paralleletopes

    bool is_box() const { return !cfg.set.paralleletope; }
    /// Embedding system localized on the given y-box.
    EmbeddingSystem embedding(const IntervalVector& ybox) const;
    InvarianceCertificate certify() const;
    /// Forward family and, when a region is known, the backward family.
    NestedFamily family() const;
};

Pipeline build_pipeline(const RunConfig& cfg);

/// JSON documents written by the CLI.
std::string certificate_json(const Pipeline& p, const InvarianceCertificate& cert);
std::string family_json(const Pipeline& p, const NestedFamily& fam);
std::string transform_json(const Pipeline& p);
std::string projections_csv(const Pipeline& p, const NestedFamily& fam);
std::string boundary_report_json(const Pipeline& p, const BoundaryReport& report);
std::vector<BoundaryWitness> witnesses_from_json(const std::string& text);
std::string containment_json(const Pipeline& p, const ContainmentReport& report, const TrajectoryBundle& bundle);

}  // namespace invkit
