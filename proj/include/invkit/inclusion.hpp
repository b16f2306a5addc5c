#pragma once

#include <memory>
#include <optional>
#include <string>

#include "invkit/expr.hpp"
#include "invkit/interval.hpp"
#include "invkit/network.hpp"

namespace invkit {

/// x' = f(x, N(x), w) with w in wbox. The network is absent when p = 0.
class ClosedLoopSystem {
public:
    ClosedLoopSystem(std::shared_ptr<const Dynamics> dynamics, std::shared_ptr<const FeedforwardNetwork> network,
                     IntervalVector wbox);

    std::size_t n() const { return dynamics_->dims().n; }
    const Dims& dims() const { return dynamics_->dims(); }
    const Dynamics& dynamics() const { return *dynamics_; }
    bool has_network() const { return network_ != nullptr; }
    const FeedforwardNetwork& network() const;
    std::shared_ptr<const FeedforwardNetwork> network_ptr() const { return network_; }
    std::shared_ptr<const Dynamics> dynamics_ptr() const { return dynamics_; }
    const IntervalVector& wbox() const { return wbox_; }

    Eigen::VectorXd control(const Eigen::VectorXd& x) const;
    Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;
    /// Guaranteed enclosure of f(x, N(x), w) at a point.
    IntervalVector enclose(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;
    /// Network bound over a box: CROWN intersected with IBP.
    IntervalVector network_bounds(const IntervalVector& box) const;

private:
    std::shared_ptr<const Dynamics> dynamics_;
    std::shared_ptr<const FeedforwardNetwork> network_;
    IntervalVector wbox_;
};

/// Data shared by all faces inside one localization [z].
struct Localization {
    IntervalVector z;
    IntervalVector nz;  // network inclusion over z
    bool jacobian = false;
    std::string note;   // why the Jacobian form is unavailable
    JacobianIntervals J;
    Eigen::VectorXd x0;
    Eigen::VectorXd u0;
    Eigen::VectorXd w0;
    IntervalVector R;
};

Localization localize(const ClosedLoopSystem& sys, const IntervalVector& z);

/// f(c) + J(box) (box - c) over all n+p+q variables.
IntervalVector jacobian_based(const Dynamics& dyn, const IntervalVector& box, const Eigen::VectorXd& center);

/// ([Jx] + [Ju] C) face + [Ju] [d_lo, d_hi] + R.
IntervalVector closed_loop_jacobian_inclusion(const ClosedLoopSystem& sys, const Localization& loc,
                                              const AffineRelaxation& rel, const IntervalVector& face);
/// Convenience: localizes on z and relaxes the network over the face.
IntervalVector closed_loop_jacobian_inclusion(const ClosedLoopSystem& sys, const IntervalVector& z,
                                              const IntervalVector& face);

/// F(face, N(face), wbox) with the network bounded by interval propagation.
IntervalVector closed_loop_natural_inclusion(const ClosedLoopSystem& sys, const IntervalVector& face);

enum class InclusionMode { jacobian, natural };
InclusionMode parse_inclusion_mode(std::string_view text);

/// An inclusion function for the right-hand side, valid for boxes inside
/// region(). Coordinates are whatever the embedding evolves in.
class LocalizedInclusion {
public:
    virtual ~LocalizedInclusion() = default;
    virtual std::size_t dim() const = 0;
    virtual const IntervalVector& region() const = 0;
    virtual IntervalVector evaluate(const IntervalVector& face) const = 0;
    virtual std::shared_ptr<const LocalizedInclusion> relocalize(const IntervalVector& region) const = 0;
    /// "jacobian" or "natural".
    virtual std::string construction() const = 0;
    virtual std::string note() const = 0;
    /// Localization box in the original state coordinates.
    virtual IntervalVector localization() const = 0;
};

class BoxInclusion : public LocalizedInclusion {
public:
    BoxInclusion(ClosedLoopSystem sys, const IntervalVector& region, InclusionMode mode = InclusionMode::jacobian);

    std::size_t dim() const override { return sys_.n(); }
    const IntervalVector& region() const override { return loc_.z; }
    IntervalVector evaluate(const IntervalVector& face) const override;
    std::shared_ptr<const LocalizedInclusion> relocalize(const IntervalVector& region) const override;
    std::string construction() const override;
    std::string note() const override { return loc_.note; }
    IntervalVector localization() const override { return loc_.z; }

    const Localization& localization_data() const { return loc_; }
    const ClosedLoopSystem& system() const { return sys_; }

private:
    ClosedLoopSystem sys_;
    Localization loc_;
    InclusionMode mode_;
};

std::optional<IntervalVector> intersect(const IntervalVector& a, const IntervalVector& b);

}  // namespace invkit
