#include "panacea/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea {

bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw InvalidArgument(fmt::format("dominates: {} vs {} objectives", a.size(), b.size()));
    }
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) {
            return false;
        }
        strict = strict || a(i) > b(i);
    }
    return strict;
}

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) { return dominates(a.J, b.J); }

Front pareto_filter(const std::vector<ObjectivePoint>& points) {
    Front out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < points.size() && keep; ++j) {
            keep = !(j != i && dominates(points[j], points[i]));
        }
        for (const ObjectivePoint& kept : out) {
            keep = keep && kept.J != points[i].J;
        }
        if (keep) {
            out.push_back(points[i]);
        }
    }
    return out;
}

namespace {

void require_dominates_reference(const std::vector<ObjectivePoint>& front, const Eigen::VectorXd& reference) {
    for (const ObjectivePoint& p : front) {
        if (!dominates(p.J, reference)) {
            std::ostringstream point;
            point << p.J.transpose();
            throw InvalidArgument(fmt::format("hypervolume: point ({}) does not dominate the reference", point.str()));
        }
    }
}

// Points given as (x, y) pairs, all >= reference.
double area_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
    std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return a.first > b.first || (a.first == b.first && a.second > b.second); });
    double area = 0.0;
    double covered_y = ry;
    for (const auto& [x, y] : pts) {
        if (y > covered_y) {
            area += (x - rx) * (y - covered_y);
            covered_y = y;
        }
    }
    return area;
}

}  // namespace

double hypervolume_2d(const std::vector<ObjectivePoint>& front, const Eigen::VectorXd& reference) {
    if (reference.size() != 2) {
        throw InvalidArgument("hypervolume_2d needs a 2-D reference point");
    }
    require_dominates_reference(front, reference);
    std::vector<std::pair<double, double>> pts;
    for (const ObjectivePoint& p : front) {
        pts.emplace_back(p.J(0), p.J(1));
    }
    return area_2d(std::move(pts), reference(0), reference(1));
}

double hypervolume(const std::vector<ObjectivePoint>& front, const Eigen::VectorXd& reference) {
    if (reference.size() == 2) {
        return hypervolume_2d(front, reference);
    }
    if (reference.size() != 3) {
        throw InvalidArgument(fmt::format("hypervolume supports m = 2 or 3, got {}", reference.size()));
    }
    require_dominates_reference(front, reference);
    // Slice along the third objective: between consecutive levels the
    // dominated cross-section is the 2-D union of the points above the slab.
    std::vector<double> levels;
    for (const ObjectivePoint& p : front) {
        levels.push_back(p.J(2));
    }
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double volume = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double top = levels[l];
        const double bottom = l + 1 < levels.size() ? levels[l + 1] : reference(2);
        std::vector<std::pair<double, double>> slice;
        for (const ObjectivePoint& p : front) {
            if (p.J(2) >= top) {
                slice.emplace_back(p.J(0), p.J(1));
            }
        }
        volume += area_2d(std::move(slice), reference(0), reference(1)) * (top - bottom);
    }
    return volume;
}

Eigen::VectorXd shared_reference(const std::vector<std::vector<ObjectivePoint>>& fronts, double offset) {
    Eigen::VectorXd ref;
    for (const auto& front : fronts) {
        for (const ObjectivePoint& p : front) {
            if (ref.size() == 0) {
                ref = p.J;
            } else if (ref.size() != p.J.size()) {
                throw InvalidArgument("shared_reference: fronts disagree on the number of objectives");
            } else {
                ref = ref.cwiseMin(p.J);
            }
        }
    }
    if (ref.size() == 0) {
        throw InvalidArgument("shared_reference: no points");
    }
    return ref.array() - offset;
}

std::size_t count_dominated(const std::vector<ObjectivePoint>& a, const std::vector<ObjectivePoint>& b) {
    return static_cast<std::size_t>(std::count_if(b.begin(), b.end(), [&](const ObjectivePoint& q) {
        return std::any_of(a.begin(), a.end(), [&](const ObjectivePoint& p) { return dominates(p, q); });
    }));
}

SweepResult front_sweep(const std::vector<PreferenceVector>& grid, const ObjectiveEvaluator& evaluate,
                        const std::string& method) {
    SweepResult out;
    out.points.reserve(grid.size());
    for (const PreferenceVector& lam : grid) {
        const auto w = lam.weights();
        out.points.push_back({evaluate(lam), std::vector<double>(w.begin(), w.end()), method});
    }
    out.front = pareto_filter(out.points);
    return out;
}

bool concavity_check(const std::vector<ObjectivePoint>& front, double tol) {
    if (front.size() < 3) {
        return true;
    }
    std::vector<Eigen::Vector2d> pts;
    for (const ObjectivePoint& p : front) {
        if (p.J.size() != 2) {
            throw InvalidArgument("concavity_check needs a 2-D front");
        }
        pts.emplace_back(p.J(0), p.J(1));
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x() < b.x(); });
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const Eigen::Vector2d& l = pts[i - 1];
        const Eigen::Vector2d& r = pts[i + 1];
        const double span = r.x() - l.x();
        if (span <= 0.0) {
            continue;
        }
        const double t = (pts[i].x() - l.x()) / span;
        const double chord = l.y() + t * (r.y() - l.y());
        if (pts[i].y() < chord - tol) {
            return false;
        }
    }
    return true;
}

double hausdorff_distance(const std::vector<ObjectivePoint>& a, const std::vector<ObjectivePoint>& b) {
    if (a.empty() || b.empty()) {
        throw InvalidArgument("hausdorff_distance: empty front");
    }
    auto directed = [](const std::vector<ObjectivePoint>& from, const std::vector<ObjectivePoint>& to) {
        double worst = 0.0;
        for (const ObjectivePoint& p : from) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const ObjectivePoint& q : to) {
                nearest = std::min(nearest, (p.J - q.J).norm());
            }
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

MixtureScan dpo_mixture_scan(const Tensor& policy_a, const Tensor& policy_b, double alpha, const Tensor& reference,
                             const PreferenceSlice& data, double beta) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument(fmt::format("alpha must lie in [0, 1], got {}", alpha));
    }
    const Tensor log_ref = reference.array().log();
    auto loss_at = [&](double p) {
        const Tensor mixed = p * policy_a + (1.0 - p) * policy_b;
        return dpo_loss(Tensor(mixed.array().log()), log_ref, data, beta);
    };
    const double loss_a = loss_at(1.0);
    const double loss_b = loss_at(0.0);
    const double target = alpha * loss_a + (1.0 - alpha) * loss_b;
    if (alpha == 1.0) {
        return {1.0, 0.0};
    }
    if (alpha == 0.0) {
        return {0.0, 0.0};
    }
    // g(0) and g(1) bracket zero, so bisection converges to some root even
    // when the loss is not monotone in p.
    double lo = 0.0;
    double hi = 1.0;
    double g_lo = loss_b - target;
    MixtureScan best{0.0, std::abs(g_lo)};
    if (std::abs(loss_a - target) < best.residual) {
        best = {1.0, std::abs(loss_a - target)};
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-16; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = loss_at(mid) - target;
        if (std::abs(g_mid) < best.residual) {
            best = {mid, std::abs(g_mid)};
        }
        if (g_mid == 0.0) {
            break;
        }
        if ((g_mid > 0.0) == (g_lo > 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    return best;
}

std::vector<FrontRow> to_rows(const std::vector<ObjectivePoint>& points) {
    std::vector<FrontRow> rows;
    for (const ObjectivePoint& p : points) {
        rows.push_back({p.method, p.lambda, std::vector<double>(p.J.data(), p.J.data() + p.J.size()), {}});
    }
    return rows;
}

std::vector<ObjectivePoint> to_points(const std::vector<FrontRow>& rows) {
    std::vector<ObjectivePoint> out;
    for (const FrontRow& r : rows) {
        out.push_back({Eigen::Map<const Eigen::VectorXd>(r.J.data(), static_cast<Eigen::Index>(r.J.size())), r.lambda,
                       r.method});
    }
    return out;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_front_csv(std::ostream& out, const std::vector<FrontRow>& rows) {
    if (rows.empty()) {
        out << "method\n";
        return;
    }
    const std::size_t m = rows.front().J.size();
    const bool oracle = !rows.front().oracle_J.empty();
    out << "method";
    for (std::size_t i = 1; i <= m; ++i) {
        out << ",lambda_" << i;
    }
    for (std::size_t i = 1; i <= m; ++i) {
        out << ",J_" << i;
    }
    if (oracle) {
        for (std::size_t i = 1; i <= m; ++i) {
            out << ",J*_" << i;
        }
    }
    out << '\n';
    for (const FrontRow& r : rows) {
        if (r.lambda.size() != m || r.J.size() != m || (oracle && r.oracle_J.size() != m)) {
            throw InvalidArgument("write_front_csv: rows disagree on the number of objectives");
        }
        out << r.method;
        for (double v : r.lambda) {
            out << ',' << format_double(v);
        }
        for (double v : r.J) {
            out << ',' << format_double(v);
        }
        for (double v : r.oracle_J) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

std::vector<FrontRow> read_front_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidArgument("front CSV is empty");
    }
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        return cells;
    };
    const std::vector<std::string> header = split(line);
    if (header.empty() || header[0] != "method") {
        throw InvalidArgument("front CSV header must start with 'method'");
    }
    std::size_t m = 0;
    while (m + 1 < header.size() && header[m + 1] == fmt::format("lambda_{}", m + 1)) {
        ++m;
    }
    const bool oracle = header.size() == 1 + 3 * m;
    if (m == 0 || (header.size() != 1 + 2 * m && !oracle)) {
        throw InvalidArgument(fmt::format("unrecognized front CSV header: {}", line));
    }
    std::vector<FrontRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            throw InvalidArgument(fmt::format("front CSV row has {} cells, header has {}", cells.size(), header.size()));
        }
        FrontRow row;
        row.method = cells[0];
        auto number = [&](std::size_t i) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cells[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[i].size()) {
                throw InvalidArgument(fmt::format("bad number '{}' in front CSV", cells[i]));
            }
            return v;
        };
        for (std::size_t i = 0; i < m; ++i) {
            row.lambda.push_back(number(1 + i));
            row.J.push_back(number(1 + m + i));
            if (oracle) {
                row.oracle_J.push_back(number(1 + 2 * m + i));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json front_to_json(const std::vector<FrontRow>& rows) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const FrontRow& r : rows) {
        nlohmann::ordered_json p;
        p["method"] = r.method;
        p["lambda"] = r.lambda;
        p["objectives"] = r.J;
        if (!r.oracle_J.empty()) {
            p["oracle_objectives"] = r.oracle_J;
        }
        points.push_back(std::move(p));
    }
    nlohmann::ordered_json out;
    out["points"] = std::move(points);
    return out;
}

}  // namespace panacea
