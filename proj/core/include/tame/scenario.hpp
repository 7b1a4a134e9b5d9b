#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tame/fields.hpp"
#include "tame/forge.hpp"
#include "tame/submanifold.hpp"
#include "tame/verify.hpp"

namespace tame::scenario {

/// Declarative description of one end-to-end run: chart, metric,
/// submanifolds, construction, verification plan.
struct Scenario {
    std::string name;
    std::string source_path;

    fields::Chart chart;

    enum class MetricKind { flat, conformal, file };
    MetricKind metric_kind = MetricKind::flat;
    std::string metric_factor; // conformal: expression in x1..xn
    std::string metric_path;   // file

    struct SubmanifoldSpec {
        std::string name;
        int dim = 1;
        std::array<int, 4> resolution{};
        double orientation = 1.0;
        std::vector<std::string> map;
    };
    std::vector<SubmanifoldSpec> submanifolds;

    enum class Construction { glue_form, horizontal, conformal, multi, multi_level, prescribe_mc };
    Construction construction = Construction::conformal;
    double epsilon = 0.1;
    double margin = 0.1;
    double shear_theta = 1.5707963267948966; // negative-control knob
    double form_scale = 1.0;                 // negative-control knob
    std::vector<std::vector<int>> levels;    // multi-level: submanifold indices per level

    enum class XiKind { zero, scale_mc };
    XiKind xi_kind = XiKind::zero;
    double xi_factor = 0.0;

    comass::OptimizerBudget budget;

    std::vector<std::string> checks; // calibration, competitors, sign-combinations,
                                     // geodesic-tangent, fiber-geodesics, wps, mean-curvature
    int competitors = 100;
    std::uint64_t seed = 7;
    double tolerance_scale = 1.0;

    bool dump_fields = false;
    bool competitors_csv = true;

    /// Parses and validates; throws std::runtime_error with file/line context.
    static Scenario load(const std::string& path);

    /// Deterministic resolved plan; never runs numerics.
    std::string describe() const;
};

struct RunOptions {
    std::string out_dir; // empty: $TAME_OUT or ./tame-out/<name>
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    double tol_scale = 1.0;
};

struct RunOutcome {
    bool passed = false;
    std::string failing; // first failing criterion name
    std::string report_json;
    std::string out_dir;
};

RunOutcome run(const Scenario& scenario, const RunOptions& options = {});

} // namespace tame::scenario
