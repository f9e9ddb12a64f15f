#pragma once

// Dominance, Pareto filtering, hypervolume and front geometry. Objectives are
// maximized throughout.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "panacea/adapter.hpp"
#include "panacea/autodiff.hpp"
#include "panacea/objectives.hpp"

namespace panacea {

struct ObjectivePoint {
    Eigen::VectorXd J;
    std::vector<double> lambda;  // empty when untagged
    std::string method;
};

using Front = std::vector<ObjectivePoint>;

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);
bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Maximal non-dominated subset in input order; exact duplicates kept once.
Front pareto_filter(const std::vector<ObjectivePoint>& points);

/// Area (m = 2) or volume (m = 3) dominated by `front` and bounded below by
/// `reference`. Every point must dominate the reference.
double hypervolume(const std::vector<ObjectivePoint>& front, const Eigen::VectorXd& reference);
double hypervolume_2d(const std::vector<ObjectivePoint>& front, const Eigen::VectorXd& reference);

/// Componentwise minimum over all points of all fronts, minus `offset`.
Eigen::VectorXd shared_reference(const std::vector<std::vector<ObjectivePoint>>& fronts, double offset = 0.1);

/// Number of points in `b` dominated by at least one point in `a`.
std::size_t count_dominated(const std::vector<ObjectivePoint>& a, const std::vector<ObjectivePoint>& b);

struct SweepResult {
    std::vector<ObjectivePoint> points;  // one per grid entry, unfiltered
    Front front;
};

using ObjectiveEvaluator = std::function<Eigen::VectorXd(const PreferenceVector&)>;

SweepResult front_sweep(const std::vector<PreferenceVector>& grid, const ObjectiveEvaluator& evaluate,
                        const std::string& method = {});

/// Sorted by J_1, no point may sit more than `tol` below the chord of its
/// neighbours. Fronts with fewer than three points pass.
bool concavity_check(const std::vector<ObjectivePoint>& front, double tol = 1e-6);

/// Symmetric Hausdorff distance between two point sets in objective space.
double hausdorff_distance(const std::vector<ObjectivePoint>& a, const std::vector<ObjectivePoint>& b);
inline double ls_tche_front_agreement(const std::vector<ObjectivePoint>& ls, const std::vector<ObjectivePoint>& tche) {
    return hausdorff_distance(ls, tche);
}

struct MixtureScan {
    double p_star = 0.0;
    double residual = 0.0;
};

/// Finds p such that the DPO loss of the per-context mixture
/// p * pi_a + (1 - p) * pi_b matches alpha * L_a + (1 - alpha) * L_b.
/// Policies and reference are probability tables.
MixtureScan dpo_mixture_scan(const Tensor& policy_a, const Tensor& policy_b, double alpha, const Tensor& reference,
                             const PreferenceSlice& data, double beta);

// Front files. CSV columns: method, lambda_1..lambda_m, J_1..J_m and, when
// present, J*_1..J*_m. Numbers carry 17 significant digits.
struct FrontRow {
    std::string method;
    std::vector<double> lambda;
    std::vector<double> J;
    std::vector<double> oracle_J;  // empty unless exported with oracle columns
};

std::vector<FrontRow> to_rows(const std::vector<ObjectivePoint>& points);
std::vector<ObjectivePoint> to_points(const std::vector<FrontRow>& rows);

void write_front_csv(std::ostream& out, const std::vector<FrontRow>& rows);
std::vector<FrontRow> read_front_csv(std::istream& in);
nlohmann::ordered_json front_to_json(const std::vector<FrontRow>& rows);

std::string format_double(double v);

}  // namespace panacea
