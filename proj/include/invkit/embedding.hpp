#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invkit/inclusion.hpp"
#include "invkit/interval.hpp"

namespace invkit {

/// The 2n-dimensional embedding ODE induced by a localized inclusion.
struct EmbeddingSystem {
    std::shared_ptr<const LocalizedInclusion> incl;

    std::size_t dim() const { return incl->dim(); }
};

/// Lower half from the lower faces [x, xhat_{i:x}], upper half from the upper
/// faces [x_{i:xhat}, xhat]. Throws LocalizationError when the box is not
/// inside the inclusion's region.
Eigen::VectorXd embedding_rhs(const EmbeddingSystem& es, const EmbeddingState& s);

enum class Verdict { invariant, inconclusive };
std::string_view to_string(Verdict v);

struct InvarianceCertificate {
    IntervalVector box;
    Eigen::VectorXd rhs;           // stacked (lower faces; upper faces)
    bool condition_holds = false;  // SE-nonnegativity of rhs
    bool sound_rounding = true;
    Verdict verdict = Verdict::inconclusive;
    std::string construction;
    std::string note;
    IntervalVector localization;
};

/// verdict is invariant only if the condition holds and rounding is sound.
InvarianceCertificate check_invariance(const EmbeddingSystem& es, const IntervalVector& box);

/// Re-localizes the inclusion on the given box.
EmbeddingSystem refine_localization(const EmbeddingSystem& es, const EmbeddingState& s);

struct FamilyMember {
    double t = 0.0;
    EmbeddingState state;
    InvarianceCertificate certificate;
};

struct NestedFamily {
    std::vector<FamilyMember> members;  // ascending t
    bool converged = false;
    std::optional<EmbeddingState> equilibrium;
    std::string status;      // why integration stopped
    std::string diagnostic;  // set on abnormal stops
};

struct ForwardOptions {
    double h = 0.1;
    std::size_t max_steps = 90;
    double conv_tol = 1e-8;
    bool refine = true;
};

struct BackwardOptions {
    double h = 0.05;
    std::size_t max_steps = 2000;
    bool refine = true;
};

/// Explicit Euler from s0, which must certify. Each new box is re-certified
/// before it joins the family.
NestedFamily integrate_forward(const EmbeddingSystem& es, const EmbeddingState& s0, const ForwardOptions& opt);

/// Euler on the negated right-hand side while boxes satisfy `inside` and
/// keep certifying. Members carry negative times; s0 is not included.
NestedFamily integrate_backward(const EmbeddingSystem& es, const EmbeddingState& s0,
                                const std::function<bool(const IntervalVector&)>& inside, const BackwardOptions& opt);
NestedFamily integrate_backward(const EmbeddingSystem& es, const EmbeddingState& s0, const IntervalVector& bound,
                                const BackwardOptions& opt);

/// Backward members followed by forward members, ascending in t.
NestedFamily merge(const NestedFamily& backward, const NestedFamily& forward);

bool is_nested(const NestedFamily& family);

/// t, x1_lo..xn_lo, x1_hi..xn_hi, certified
std::string family_csv(const NestedFamily& family, const std::string& prefix = "x");

std::string format_double(double v);

}  // namespace invkit
