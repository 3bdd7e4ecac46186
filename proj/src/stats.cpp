#include "weakties/stats.hpp"

#include "weakties/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace weakties::stats {

namespace {

std::string column_label(const std::vector<std::string>& names, std::size_t i) {
    if (i < names.size())
        return names[i];
    return "column " + std::to_string(i);
}

// Levels are numeric; integral values print without a fractional part so year
// dummies read naturally (year_creation_2015).
std::string level_label(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double two_sided_p(double t, double dof) {
    if (!std::isfinite(t))
        return 0.0;
    boost::math::students_t_distribution<double> dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

} // namespace

std::size_t DataTable::index_of(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == column)
            return i;
    throw DataError("table has no column '" + column + "'");
}

Standardization standardize_log(const Eigen::MatrixXd& m, const std::vector<bool>& log_flags,
                                const std::vector<std::string>& names) {
    const Eigen::Index n = m.rows(), p = m.cols();
    if (static_cast<Eigen::Index>(log_flags.size()) != p)
        throw ConfigError("standardize_log: flag count does not match column count");
    if (n < 2)
        throw DataError("standardize_log: need at least 2 rows");

    Standardization s;
    s.z = m;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!log_flags[static_cast<std::size_t>(j)])
            continue;
        if ((s.z.col(j).array() < 0).any())
            throw DataError("standardize_log: negative value in log-flagged " +
                            column_label(names, static_cast<std::size_t>(j)));
        s.z.col(j) = s.z.col(j).array().log1p();
    }

    s.means = s.z.colwise().mean();
    s.sds.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::ArrayXd centered = s.z.col(j).array() - s.means(j);
        double var = centered.square().sum() / static_cast<double>(n - 1);
        s.sds(j) = std::sqrt(var);
        if (s.sds(j) == 0)
            throw NumericError("standardize_log: zero variance in " +
                               column_label(names, static_cast<std::size_t>(j)));
        s.z.col(j) = centered / s.sds(j);
    }
    return s;
}

namespace {

void orient_loadings(Eigen::MatrixXd& loadings) {
    for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
        double sum = loadings.col(j).sum();
        bool flip = false;
        if (std::abs(sum) > 1e-12) {
            flip = sum < 0;
        } else {
            for (Eigen::Index i = 0; i < loadings.rows(); ++i) {
                if (std::abs(loadings(i, j)) > 1e-12) {
                    flip = loadings(i, j) < 0;
                    break;
                }
            }
        }
        if (flip)
            loadings.col(j) = -loadings.col(j);
    }
}

} // namespace

PcaResult pca(const Eigen::MatrixXd& standardized) {
    const Eigen::Index n = standardized.rows(), p = standardized.cols();
    if (p < 1)
        throw DataError("pca: empty matrix");
    if (n <= p)
        throw DataError("pca: need more rows than columns");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(standardized, Eigen::ComputeFullV);
    Eigen::VectorXd sv = svd.singularValues();

    double total = sv.array().square().sum();
    if (total <= 0)
        throw NumericError("pca: matrix has no variance");

    PcaResult r;
    r.loadings = svd.matrixV();
    r.explained_variance_ratio.resize(p);
    double tol = sv(0) * 1e-10;
    r.rank = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        bool in_rank = sv(j) > tol;
        r.explained_variance_ratio(j) = in_rank ? sv(j) * sv(j) / total : 0.0;
        if (in_rank)
            ++r.rank;
    }
    orient_loadings(r.loadings);
    r.means = Eigen::VectorXd::Zero(p);
    r.sds = Eigen::VectorXd::Ones(p);
    return r;
}

PcaResult fit_pca(const Eigen::MatrixXd& raw, const std::vector<bool>& log_flags,
                  const std::vector<std::string>& names) {
    Standardization s = standardize_log(raw, log_flags, names);
    PcaResult r = pca(s.z);
    r.means = s.means;
    r.sds = s.sds;
    return r;
}

Eigen::MatrixXd pca_scores(const PcaResult& result, const Eigen::MatrixXd& standardized_rows) {
    if (standardized_rows.cols() != result.loadings.rows())
        throw DataError("pca_scores: column count does not match loadings");
    return standardized_rows * result.loadings;
}

Eigen::MatrixXd standardize_rows(const PcaResult& result, const Eigen::MatrixXd& raw,
                                 const std::vector<bool>& log_flags) {
    const Eigen::Index p = raw.cols();
    if (p != result.means.size() || static_cast<Eigen::Index>(log_flags.size()) != p)
        throw DataError("standardize_rows: column count does not match fitted standardization");
    Eigen::MatrixXd z = raw;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (log_flags[static_cast<std::size_t>(j)])
            z.col(j) = z.col(j).array().log1p();
        z.col(j) = (z.col(j).array() - result.means(j)) / result.sds(j);
    }
    return z;
}

const RegressionTerm& RegressionResult::term(const std::string& name) const {
    for (auto& t : terms)
        if (t.name == name)
            return t;
    throw DataError("regression has no term '" + name + "'");
}

RegressionResult ols_fixed_effects(const DataTable& table, const RegressionSpec& spec) {
    const std::size_t yi = table.index_of(spec.response);
    std::vector<std::size_t> xi;
    for (auto& r : spec.regressors)
        xi.push_back(table.index_of(r));
    const bool with_fe = !spec.fe_column.empty();
    const std::size_t fi = with_fe ? table.index_of(spec.fe_column) : 0;

    // Listwise deletion over every column the model touches.
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        bool complete = row[yi].has_value();
        for (std::size_t c : xi)
            complete = complete && row[c].has_value();
        if (with_fe)
            complete = complete && row[fi].has_value();
        if (complete)
            keep.push_back(r);
    }

    std::vector<double> levels;
    std::string reference;
    if (with_fe) {
        std::set<double> seen;
        for (std::size_t r : keep)
            seen.insert(*table.rows[r][fi]);
        levels.assign(seen.begin(), seen.end());
        if (levels.empty())
            throw DataError("ols_fixed_effects: no observations");
        reference = level_label(levels.front());
    }

    const std::size_t n = keep.size();
    const std::size_t k = 1 + xi.size() + (with_fe ? levels.size() - 1 : 0);
    if (n <= k)
        throw DataError("ols_fixed_effects: " + std::to_string(n) + " complete rows for " +
                        std::to_string(k) + " parameters");

    std::vector<std::string> design_names;
    design_names.push_back("(intercept)");
    for (auto& r : spec.regressors)
        design_names.push_back(r);
    for (std::size_t l = 1; l < levels.size(); ++l)
        design_names.push_back(spec.fe_column + "_" + level_label(levels[l]));

    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = table.rows[keep[r]];
        y(static_cast<Eigen::Index>(r)) = *row[yi];
        X(static_cast<Eigen::Index>(r), 0) = 1.0;
        for (std::size_t c = 0; c < xi.size(); ++c)
            X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(1 + c)) = *row[xi[c]];
        for (std::size_t l = 1; l < levels.size(); ++l)
            X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(1 + xi.size() + l - 1)) =
                *row[fi] == levels[l] ? 1.0 : 0.0;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (rank < static_cast<Eigen::Index>(k)) {
        // The permutation moves dependent columns to the tail; name the first.
        auto perm = qr.colsPermutation().indices();
        std::string dep = design_names[static_cast<std::size_t>(perm(rank))];
        throw NumericError("ols_fixed_effects: regressor '" + dep +
                           "' is collinear with the others");
    }

    Eigen::VectorXd beta = qr.solve(y);
    Eigen::VectorXd resid = y - X * beta;
    const double ssr = resid.squaredNorm();
    const double sst = (y.array() - y.mean()).square().sum();
    if (sst == 0)
        throw NumericError("ols_fixed_effects: response '" + spec.response + "' has zero variance");

    RegressionResult out;
    out.n_observations = n;
    out.sigma2 = ssr / static_cast<double>(n - k);
    out.r2 = 1.0 - ssr / sst;
    out.adjusted_r2 =
        1.0 - (1.0 - out.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);
    out.fe_column = spec.fe_column;
    out.fe_reference = reference;
    for (double l : levels)
        out.fe_levels.push_back(level_label(l));

    // cov(beta) = sigma2 (X'X)^-1 = sigma2 P R^-1 R^-T P' from X P = Q R.
    Eigen::MatrixXd R = qr.matrixQR()
                            .topLeftCorner(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))
                            .template triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
    Eigen::MatrixXd cov = qr.colsPermutation() * (Rinv * Rinv.transpose()) *
                          qr.colsPermutation().transpose();

    const double dof = static_cast<double>(n - k);
    for (std::size_t c = 0; c < k; ++c) {
        RegressionTerm t;
        t.name = design_names[c];
        t.coef = beta(static_cast<Eigen::Index>(c));
        t.se = std::sqrt(out.sigma2 * cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)));
        t.t = t.se > 0 ? t.coef / t.se : (t.coef == 0 ? 0.0 : std::numeric_limits<double>::infinity());
        t.p = t.se > 0 ? two_sided_p(t.t, dof) : (t.coef == 0 ? 1.0 : 0.0);
        out.terms.push_back(std::move(t));
    }
    return out;
}

std::vector<std::pair<std::string, DataTable>> cohort_split(const DataTable& table,
                                                            CohortAxis axis) {
    const char* column = axis == CohortAxis::YearCreation ? "year_creation"
                         : axis == CohortAxis::CoreTeamSize ? "n_core_devs"
                                                            : "org_owned";
    const std::size_t ci = table.index_of(column);

    auto bin_label = [axis](double v) -> std::string {
        switch (axis) {
        case CohortAxis::YearCreation:
            return level_label(v);
        case CohortAxis::CoreTeamSize:
            if (v >= 4)
                return ">=4";
            return level_label(std::max(v, 1.0));
        case CohortAxis::Ownership:
            return v != 0 ? "organization" : "user";
        }
        return "?";
    };

    std::map<std::string, DataTable> cohorts;
    for (auto& row : table.rows) {
        if (!row[ci].has_value())
            continue;
        std::string label = bin_label(*row[ci]);
        auto [it, fresh] = cohorts.try_emplace(label);
        if (fresh)
            it->second.columns = table.columns;
        it->second.rows.push_back(row);
    }

    // Fixed presentation order per axis; map order is already right for years.
    std::vector<std::string> order;
    if (axis == CohortAxis::CoreTeamSize)
        order = {"1", "2", "3", ">=4"};
    else if (axis == CohortAxis::Ownership)
        order = {"user", "organization"};
    else
        for (auto& [label, t] : cohorts)
            order.push_back(label);

    std::vector<std::pair<std::string, DataTable>> out;
    for (auto& label : order) {
        auto it = cohorts.find(label);
        if (it != cohorts.end())
            out.emplace_back(label, std::move(it->second));
    }
    return out;
}

TTestResult group_ttest(const std::vector<double>& scores, const std::vector<bool>& flags) {
    if (scores.size() != flags.size())
        throw ConfigError("group_ttest: scores and flags differ in length");

    std::vector<double> a, b;
    for (std::size_t i = 0; i < scores.size(); ++i)
        (flags[i] ? a : b).push_back(scores[i]);
    if (a.size() < 2 || b.size() < 2)
        throw DataError("group_ttest: both groups need at least 2 members");

    auto mean_var = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v)
            m += x;
        m /= static_cast<double>(v.size());
        double s2 = 0;
        for (double x : v)
            s2 += (x - m) * (x - m);
        s2 /= static_cast<double>(v.size() - 1);
        return std::pair<double, double>{m, s2};
    };
    auto [ma, va] = mean_var(a);
    auto [mb, vb] = mean_var(b);
    if (va == 0 || vb == 0)
        throw NumericError("group_ttest: degenerate group with zero variance");

    const double sa = va / static_cast<double>(a.size());
    const double sb = vb / static_cast<double>(b.size());
    TTestResult r;
    r.mean_flagged = ma;
    r.mean_rest = mb;
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.dof = (sa + sb) * (sa + sb) /
            (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
    r.p = two_sided_p(r.t, r.dof);
    return r;
}

namespace {

std::string stars(double p) {
    if (p < 0.001)
        return "***";
    if (p < 0.01)
        return "**";
    if (p < 0.05)
        return "*";
    return "";
}

std::string fmt_coef(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

bool is_fe_dummy(const RegressionResult& model, const std::string& term) {
    return !model.fe_column.empty() && term.rfind(model.fe_column + "_", 0) == 0;
}

} // namespace

std::string render_regression_table(
    const std::vector<std::pair<std::string, RegressionResult>>& models) {
    // Row order: union of non-dummy terms in first appearance order; the FE
    // block is collapsed to a yes/no footer line like published tables.
    std::vector<std::string> term_order;
    bool any_fe = false;
    for (auto& [name, m] : models) {
        (void)name;
        any_fe = any_fe || !m.fe_column.empty();
        for (auto& t : m.terms)
            if (!is_fe_dummy(m, t.name) &&
                std::find(term_order.begin(), term_order.end(), t.name) == term_order.end())
                term_order.push_back(t.name);
    }
    // Intercept conventionally prints last.
    auto ic = std::find(term_order.begin(), term_order.end(), "(intercept)");
    if (ic != term_order.end()) {
        term_order.erase(ic);
        term_order.push_back("(intercept)");
    }

    const std::size_t ncol = models.size();
    std::vector<std::vector<std::string>> grid; // rows of 1 + ncol cells
    auto blank_row = [&] { return std::vector<std::string>(1 + ncol); };

    {
        auto head = blank_row();
        for (std::size_t c = 0; c < ncol; ++c)
            head[1 + c] = models[c].first;
        grid.push_back(std::move(head));
        grid.push_back(blank_row());
    }

    for (auto& term : term_order) {
        auto coef_row = blank_row();
        auto se_row = blank_row();
        coef_row[0] = term;
        for (std::size_t c = 0; c < ncol; ++c) {
            const auto& m = models[c].second;
            auto it = std::find_if(m.terms.begin(), m.terms.end(),
                                   [&](const RegressionTerm& t) { return t.name == term; });
            if (it == m.terms.end())
                continue;
            coef_row[1 + c] = fmt_coef(it->coef) + stars(it->p);
            se_row[1 + c] = "(" + fmt_coef(it->se) + ")";
        }
        grid.push_back(std::move(coef_row));
        grid.push_back(std::move(se_row));
    }

    grid.push_back(blank_row());
    if (any_fe) {
        auto fe_row = blank_row();
        fe_row[0] = "year fixed effects";
        for (std::size_t c = 0; c < ncol; ++c)
            fe_row[1 + c] = models[c].second.fe_column.empty() ? "No" : "Yes";
        grid.push_back(std::move(fe_row));
    }
    {
        auto n_row = blank_row();
        n_row[0] = "observations";
        for (std::size_t c = 0; c < ncol; ++c)
            n_row[1 + c] = std::to_string(models[c].second.n_observations);
        grid.push_back(std::move(n_row));
        auto r2_row = blank_row();
        r2_row[0] = "adjusted R2";
        for (std::size_t c = 0; c < ncol; ++c)
            r2_row[1 + c] = fmt_coef(models[c].second.adjusted_r2);
        grid.push_back(std::move(r2_row));
    }

    std::vector<std::size_t> width(1 + ncol, 0);
    for (auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());

    std::ostringstream out;
    for (auto& row : grid) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::string cell = row[c];
            if (c == 0)
                line += cell + std::string(width[c] - cell.size(), ' ');
            else
                line += "  " + std::string(width[c] - cell.size(), ' ') + cell;
        }
        while (!line.empty() && line.back() == ' ')
            line.pop_back();
        out << line << '\n';
    }
    return out.str();
}

} // namespace weakties::stats
