#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "invkit/config.hpp"

namespace fs = std::filesystem;
using namespace invkit;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInconclusive = 2;
constexpr int kFalsified = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string rounding;
};

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

Pipeline load(const Common& c)
{
    RunConfig cfg = load_run_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.rounding.empty()) cfg.rounding = parse_rounding_mode(c.rounding);
    set_rounding_mode(cfg.rounding);
    cfg.boundary.seed = cfg.seed;
    fs::create_directories(c.out);
    return build_pipeline(cfg);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_verify(const Common& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Pipeline p = load(c);
    const InvarianceCertificate cert = p.certify();
    write_file(fs::path(c.out) / "certificate.json", certificate_json(p, cert));
    std::cout << "verdict: " << to_string(cert.verdict) << " (" << cert.construction << " inclusion, "
              << format_double(seconds_since(t0)) << " s)\n";
    if (!cert.note.empty()) std::cout << "note: " << cert.note << '\n';
    if (cert.verdict == Verdict::invariant) return kOk;
    if (!cert.sound_rounding && cert.condition_holds) {
        std::cout << "condition holds, but rounding is fast; rerun with --rounding sound for a certificate\n";
    } else {
        std::cout << "hint: run `invariant-kit falsify --config " << c.config
                  << "` to search the boundary for outward-pointing witnesses\n";
    }
    return kInconclusive;
}

int cmd_family(const Common& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Pipeline p = load(c);
    const InvarianceCertificate cert = p.certify();
    if (cert.verdict != Verdict::invariant) {
        std::cout << "initial set did not certify; no family computed\n";
        write_file(fs::path(c.out) / "certificate.json", certificate_json(p, cert));
        return kInconclusive;
    }
    const NestedFamily fam = p.family();
    const fs::path out(c.out);
    write_file(out / "family.csv", family_csv(fam, p.is_box() ? "x" : "y"));
    write_file(out / "family.json", family_json(p, fam));
    write_file(out / "projections.csv", projections_csv(p, fam));
    write_file(out / "transform.json", transform_json(p));
    std::size_t certified = 0;
    for (const FamilyMember& m : fam.members) certified += m.certificate.verdict == Verdict::invariant ? 1 : 0;
    std::cout << "family: " << fam.members.size() << " members (" << certified << " certified), " << fam.status
              << (is_nested(fam) ? ", nested" : ", NOT nested") << ", " << format_double(seconds_since(t0)) << " s\n";
    if (!fam.diagnostic.empty()) std::cout << "diagnostic: " << fam.diagnostic << '\n';
    return kOk;
}

int cmd_transform(const Common& c)
{
    const Pipeline p = load(c);
    write_file(fs::path(c.out) / "transform.json", transform_json(p));
    if (p.choice) {
        std::cout << "method: " << p.choice->method << ", condition " << format_double(p.choice->condition)
                  << (p.choice->stable ? ", stable" : ", NOT stable") << "\neigenvalues:";
        for (const auto& l : p.choice->eigenvalues) {
            std::cout << ' ' << format_double(l.real());
            if (l.imag() != 0.0) std::cout << (l.imag() > 0 ? "+" : "") << format_double(l.imag()) << 'i';
        }
        std::cout << '\n';
        if (!p.choice->warning.empty()) std::cout << "warning: " << p.choice->warning << '\n';
    } else {
        std::cout << "no automatic transform for this set; wrote the configured one\n";
    }
    return kOk;
}

int cmd_falsify(const Common& c, const std::string& replay)
{
    const Pipeline p = load(c);
    if (!replay.empty()) {
        std::ifstream in(replay, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + replay);
        std::stringstream buffer;
        buffer << in.rdbuf();
        const auto witnesses = witnesses_from_json(buffer.str());
        const auto confirmed = replay_witnesses(*p.sys, p.set, witnesses);
        std::size_t count = 0;
        for (std::size_t k = 0; k < witnesses.size(); ++k) {
            std::cout << "witness " << k + 1 << " (axis " << witnesses[k].axis + 1 << ' '
                      << (witnesses[k].side < 0 ? "lower" : "upper") << "): "
                      << (confirmed[k] ? "outward, confirmed" : "not reproduced") << '\n';
            count += confirmed[k] ? 1 : 0;
        }
        std::cout << count << " of " << witnesses.size() << " witnesses confirmed\n";
        return count > 0 ? kFalsified : kOk;
    }
    const BoundaryReport report = boundary_check(*p.sys, p.set, p.cfg.boundary);
    write_file(fs::path(c.out) / "falsify.json", boundary_report_json(p, report));
    std::cout << report.n_samples << " facet samples x " << report.w_per_point << " disturbances, worst inward margin "
              << format_double(report.worst_margin()) << ", " << report.witnesses.size() << " witnesses\n";
    if (!report.clean()) {
        const BoundaryWitness& w = report.witnesses.front();
        std::cout << "first witness: axis " << w.axis + 1 << ' ' << (w.side < 0 ? "lower" : "upper")
                  << " facet, outward component " << w.outward << '\n';
        return kFalsified;
    }
    return kOk;
}

int cmd_simulate(const Common& c)
{
    const Pipeline p = load(c);
    const InvarianceCertificate cert = p.certify();
    if (cert.verdict != Verdict::invariant) {
        std::cout << "initial set did not certify; nothing to check trajectories against\n";
        return kInconclusive;
    }
    RunConfig fwd_only = p.cfg;
    fwd_only.run_backward = false;
    Pipeline q = p;
    q.cfg = fwd_only;
    const NestedFamily fam = q.family();
    const double horizon = p.cfg.sim_horizon > 0.0 ? p.cfg.sim_horizon
                                                   : static_cast<double>(p.cfg.forward.max_steps) * p.cfg.forward.h;
    const TrajectoryBundle bundle =
        monte_carlo_trajectories(*p.sys, p.set, p.cfg.trajectories, horizon, p.cfg.forward.h, p.cfg.seed);
    const ContainmentReport report = check_containment(bundle, fam, p.set.T);
    write_file(fs::path(c.out) / "simulate.json", containment_json(p, report, bundle));
    std::cout << bundle.paths.size() << " trajectories, " << report.checks << " containment checks, "
              << report.violations << " violations, " << report.divergent << " divergent\n";
    if (!report.first_violation.empty()) std::cout << report.first_violation << '\n';
    return report.clean() ? kOk : kFalsified;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Forward invariance certificates for neural-network controlled systems"};
    app.require_subcommand(1);
    Common common;
    std::string replay;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "run configuration JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "override the configured seed");
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
        sub->add_option("--rounding", common.rounding, "sound or fast")->check(CLI::IsMember({"sound", "fast"}));
    };
    CLI::App* verify = app.add_subcommand("verify", "check one set for robust forward invariance");
    CLI::App* family = app.add_subcommand("family", "grow a nested family of invariant sets");
    CLI::App* transform = app.add_subcommand("transform", "report the eigen-aligned transform");
    CLI::App* falsify = app.add_subcommand("falsify", "sample the set boundary for outward witnesses");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo containment against the forward family");
    for (CLI::App* sub : {verify, family, transform, falsify, simulate}) add_common(sub);
    falsify->add_option("--replay", replay, "re-evaluate witnesses from a falsify.json")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kError;
    }
    try {
        if (verify->parsed()) return cmd_verify(common);
        if (family->parsed()) return cmd_family(common);
        if (transform->parsed()) return cmd_transform(common);
        if (falsify->parsed()) return cmd_falsify(common, replay);
        if (simulate->parsed()) return cmd_simulate(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
