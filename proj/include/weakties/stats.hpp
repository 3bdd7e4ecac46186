#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace weakties::stats {

// Named-column numeric table with missing values; the bridge between the
// feature pipeline and the estimators. Estimators delete rows listwise.
struct DataTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;

    std::size_t index_of(const std::string& column) const; // DataError if absent
    std::size_t n_rows() const { return rows.size(); }
};

struct Standardization {
    Eigen::MatrixXd z;      // transformed matrix
    Eigen::VectorXd means;  // post-log means
    Eigen::VectorXd sds;    // post-log sample (n-1) standard deviations
};

// Flagged columns get x -> ln(1+x) first (they must be non-negative), then
// every column is z-scored. Zero-variance columns are an error, named via
// `names` when given.
Standardization standardize_log(const Eigen::MatrixXd& m, const std::vector<bool>& log_flags,
                                const std::vector<std::string>& names = {});

struct PcaResult {
    Eigen::MatrixXd loadings;                 // p x p, columns are components
    Eigen::VectorXd explained_variance_ratio; // descending, sums to 1
    Eigen::VectorXd means;                    // standardization used for scores
    Eigen::VectorXd sds;
    Eigen::Index rank = 0;                    // ratios beyond rank are exactly 0
};

// Principal components of an already-standardized n x p matrix via its
// singular value decomposition. Sign convention: each loading column is
// oriented so its coefficient sum is positive (first nonzero positive on a
// zero sum), which fixes an otherwise arbitrary per-column sign.
PcaResult pca(const Eigen::MatrixXd& standardized);

// standardize_log + pca, keeping the standardization inside the result.
PcaResult fit_pca(const Eigen::MatrixXd& raw, const std::vector<bool>& log_flags,
                  const std::vector<std::string>& names = {});

// scores = standardized rows x loadings; rows must already be standardized
// with the result's means/sds (see standardize_rows).
Eigen::MatrixXd pca_scores(const PcaResult& result, const Eigen::MatrixXd& standardized_rows);

// Apply a fitted standardization (with the same log flags) to new raw rows.
Eigen::MatrixXd standardize_rows(const PcaResult& result, const Eigen::MatrixXd& raw,
                                 const std::vector<bool>& log_flags);

struct RegressionSpec {
    std::string response;
    std::vector<std::string> regressors;
    std::string fe_column; // empty = no fixed effects
};

struct RegressionTerm {
    std::string name;
    double coef = 0, se = 0, t = 0, p = 1;
};

struct RegressionResult {
    std::vector<RegressionTerm> terms; // intercept, regressors, then FE dummies
    double r2 = 0;
    double adjusted_r2 = 0;
    double sigma2 = 0;  // residual variance estimate, SSR/(n-k)
    std::size_t n_observations = 0;
    std::string fe_column;                 // empty when the model had no FE
    std::vector<std::string> fe_levels;    // all levels seen, ascending
    std::string fe_reference;              // earliest level, absorbed into intercept

    const RegressionTerm& term(const std::string& name) const; // DataError if absent
};

// OLS with an intercept, optional one-way fixed effects expanded to dummies
// (earliest level dropped as reference), listwise deletion of missing values,
// classical standard errors, and two-sided t-distribution p-values.
RegressionResult ols_fixed_effects(const DataTable& table, const RegressionSpec& spec);

enum class CohortAxis { YearCreation, CoreTeamSize, Ownership };

// Disjoint exhaustive split: per year, team-size bins {1,2,3,>=4}, or
// individual- vs organization-owned. Expects the standard feature-table
// column names (year_creation, n_core_devs, org_owned).
std::vector<std::pair<std::string, DataTable>> cohort_split(const DataTable& table,
                                                            CohortAxis axis);

struct TTestResult {
    double t = 0;
    double dof = 0;
    double p = 1;
    double mean_flagged = 0;
    double mean_rest = 0;
};

// Welch's unequal-variance two-sample test of scores[flags] vs scores[!flags].
TTestResult group_ttest(const std::vector<double>& scores, const std::vector<bool>& flags);

// Side-by-side regression table: coefficient with significance stars
// (* 0.05, ** 0.01, *** 0.001), standard error in parentheses beneath,
// n and adjusted R-squared in the footer.
std::string render_regression_table(
    const std::vector<std::pair<std::string, RegressionResult>>& models);

} // namespace weakties::stats
