#include "doctest.h"

#include "weakties/errors.hpp"
#include "weakties/rng.hpp"
#include "weakties/stats.hpp"

#include <cmath>
#include <random>

using namespace weakties;

namespace {

// columns must all have variance; rows x cols filled from a seeded generator
Eigen::MatrixXd random_matrix(int n, int p, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Eigen::MatrixXd m(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j)
            m(i, j) = rng::gaussian(gen);
    return m;
}

stats::DataTable table_from(const std::vector<std::string>& columns,
                            const std::vector<std::vector<std::optional<double>>>& rows) {
    stats::DataTable t;
    t.columns = columns;
    t.rows = rows;
    return t;
}

} // namespace

TEST_CASE("standardize_log applies log1p then z-scores") {
    Eigen::MatrixXd m(3, 2);
    m << 0, 1, std::exp(1.0) - 1, 2, std::exp(2.0) - 1, 3;
    stats::Standardization s = stats::standardize_log(m, {true, false});
    // first column becomes {0,1,2}: mean 1, sd 1
    CHECK(s.means(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.sds(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.z(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(s.z(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // second column {1,2,3}: mean 2, sd 1
    CHECK(s.z(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));

    Eigen::MatrixXd neg(2, 1);
    neg << -0.5, 1.0;
    CHECK_THROWS_AS((void)stats::standardize_log(neg, {true}), DataError);

    Eigen::MatrixXd flat(3, 1);
    flat << 4, 4, 4;
    CHECK_THROWS_WITH_AS((void)stats::standardize_log(flat, {false}, {"stars"}),
                         doctest::Contains("stars"), NumericError);
}

TEST_CASE("pca loadings are orthonormal with descending ratios summing to one") {
    Eigen::MatrixXd raw = random_matrix(200, 4, 31);
    raw.col(1) = 0.8 * raw.col(0) + 0.2 * raw.col(1); // induce correlation
    stats::PcaResult p = stats::fit_pca(raw, {false, false, false, false});

    Eigen::MatrixXd gram = p.loadings.transpose() * p.loadings;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

    double sum = 0;
    for (int j = 0; j < 4; ++j) {
        if (j)
            CHECK(p.explained_variance_ratio(j) <= p.explained_variance_ratio(j - 1) + 1e-15);
        sum += p.explained_variance_ratio(j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.rank == 4);

    // sign convention: positive column sums
    for (int j = 0; j < 4; ++j)
        CHECK(p.loadings.col(j).sum() >= 0.0);
}

TEST_CASE("pca reconstructs the standardized matrix") {
    Eigen::MatrixXd raw = random_matrix(60, 3, 7);
    stats::PcaResult p = stats::fit_pca(raw, {false, false, false});
    Eigen::MatrixXd z = stats::standardize_rows(p, raw, {false, false, false});
    Eigen::MatrixXd scores = stats::pca_scores(p, z);
    Eigen::MatrixXd back = scores * p.loadings.transpose();
    CHECK((back - z).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca flags exact rank deficiency") {
    Eigen::MatrixXd raw = random_matrix(50, 2, 13);
    Eigen::MatrixXd dup(50, 3);
    dup.col(0) = raw.col(0);
    dup.col(1) = raw.col(0); // perfect copy
    dup.col(2) = raw.col(1);
    stats::PcaResult p = stats::fit_pca(dup, {false, false, false});
    CHECK(p.rank == 2);
    CHECK(p.explained_variance_ratio(2) == 0.0); // exactly zeroed beyond rank
}

TEST_CASE("pca requires more rows than columns") {
    Eigen::MatrixXd raw = random_matrix(3, 3, 2);
    CHECK_THROWS_AS((void)stats::fit_pca(raw, {false, false, false}), DataError);
}

TEST_CASE("ols recovers noiseless coefficients exactly") {
    std::mt19937_64 gen(17);
    std::vector<std::vector<std::optional<double>>> rows;
    for (int i = 0; i < 24; ++i) {
        double x1 = rng::gaussian(gen), x2 = rng::gaussian(gen);
        rows.push_back({1.0 + 2.0 * x1 - 3.0 * x2, x1, x2});
    }
    stats::DataTable t = table_from({"y", "x1", "x2"}, rows);
    stats::RegressionSpec spec{"y", {"x1", "x2"}, ""};
    stats::RegressionResult r = stats::ols_fixed_effects(t, spec);
    CHECK(r.term("(intercept)").coef == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.term("x1").coef == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.term("x2").coef == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(r.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.adjusted_r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.n_observations == 24);
}

TEST_CASE("fixed effects expand to dummies with the earliest level dropped") {
    std::mt19937_64 gen(29);
    std::vector<std::vector<std::optional<double>>> rows;
    auto offset = [](int year) { return year == 2011 ? 5.0 : year == 2012 ? -1.0 : 0.0; };
    for (int i = 0; i < 30; ++i) {
        int year = 2010 + static_cast<int>(rng::uniform_index(gen, 3));
        double x = rng::gaussian(gen);
        rows.push_back({2.0 * x + offset(year) + 0.5, x, static_cast<double>(year)});
    }
    stats::DataTable t = table_from({"y", "x", "year"}, rows);
    stats::RegressionSpec spec{"y", {"x"}, "year"};
    stats::RegressionResult r = stats::ols_fixed_effects(t, spec);

    CHECK(r.fe_column == "year");
    CHECK(r.fe_reference == "2010");
    CHECK(r.fe_levels == std::vector<std::string>{"2010", "2011", "2012"});
    CHECK(r.term("x").coef == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.term("(intercept)").coef == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(r.term("year_2011").coef == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(r.term("year_2012").coef == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK_THROWS_AS((void)r.term("year_2010"), DataError); // reference absorbed
}

TEST_CASE("missing values trigger listwise deletion") {
    stats::DataTable t = table_from({"y", "x"}, {{1.0, 1.0},
                                                 {std::nullopt, 2.0},
                                                 {3.0, std::nullopt},
                                                 {4.0, 4.0},
                                                 {5.0, 5.0},
                                                 {2.0, 2.0}});
    stats::RegressionSpec spec{"y", {"x"}, ""};
    stats::RegressionResult r = stats::ols_fixed_effects(t, spec);
    CHECK(r.n_observations == 4);
}

TEST_CASE("collinear regressors fail loudly with the culprit named") {
    std::mt19937_64 gen(41);
    std::vector<std::vector<std::optional<double>>> rows;
    for (int i = 0; i < 20; ++i) {
        double x = rng::gaussian(gen);
        rows.push_back({x + rng::gaussian(gen), x, 2.0 * x});
    }
    stats::DataTable t = table_from({"y", "x", "x_twice"}, rows);
    stats::RegressionSpec spec{"y", {"x", "x_twice"}, ""};
    // either member of the dependent pair may be reported (pivoting picks the
    // representative); what matters is that a regressor is named at all
    CHECK_THROWS_WITH_AS((void)stats::ols_fixed_effects(t, spec),
                         doctest::Contains("' is collinear"), NumericError);
}

TEST_CASE("too few complete rows is a data error") {
    stats::DataTable t = table_from({"y", "x"}, {{1.0, 1.0}, {2.0, 2.0}});
    stats::RegressionSpec spec{"y", {"x"}, ""};
    CHECK_THROWS_AS((void)stats::ols_fixed_effects(t, spec), DataError);
}

TEST_CASE("standard errors shrink with sample size and p-values stay sane") {
    auto fit = [](int n) {
        std::mt19937_64 gen(53);
        std::vector<std::vector<std::optional<double>>> rows;
        for (int i = 0; i < n; ++i) {
            double x = rng::gaussian(gen);
            rows.push_back({0.3 * x + 0.1 * rng::gaussian(gen), x});
        }
        stats::DataTable t;
        t.columns = {"y", "x"};
        t.rows = rows;
        return stats::ols_fixed_effects(t, {"y", {"x"}, ""});
    };
    stats::RegressionResult small = fit(30), large = fit(480);
    CHECK(large.term("x").se < small.term("x").se);
    for (const auto& r : {small, large}) {
        const auto& term = r.term("x");
        CHECK(term.t == doctest::Approx(term.coef / term.se).epsilon(1e-12));
        CHECK(term.p > 0.0);
        CHECK(term.p < 1.0);
    }
    CHECK(large.term("x").p < 1e-6); // strong true effect
}

TEST_CASE("welch t-test matches a hand-computed example") {
    // flagged {1,2,3,4} vs rest {2,4,6,8,10}
    std::vector<double> scores = {1, 2, 3, 4, 2, 4, 6, 8, 10};
    std::vector<bool> flags = {true, true, true, true, false, false, false, false, false};
    stats::TTestResult r = stats::group_ttest(scores, flags);
    CHECK(r.mean_flagged == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(r.mean_rest == doctest::Approx(6.0).epsilon(1e-12));
    // se^2 = 5/3/4 + 10/5 = 2.416667; t = -3.5/sqrt(2.416667)
    CHECK(r.t == doctest::Approx(-2.2514363).epsilon(1e-6));
    // Welch-Satterthwaite dof
    CHECK(r.dof == doctest::Approx(5.5207877).epsilon(1e-6));
    CHECK(r.p == doctest::Approx(0.0691336).epsilon(1e-4));

    CHECK_THROWS_AS((void)stats::group_ttest({1.0, 2.0, 3.0}, {true, false, false}), DataError);
    CHECK_THROWS_AS((void)stats::group_ttest({1.0, 2.0}, {true}), ConfigError);
}

TEST_CASE("cohort split bins the standard axes") {
    stats::DataTable t = table_from(
        {"innov", "year_creation", "n_core_devs", "org_owned"},
        {{0.1, 2015.0, 1.0, 0.0},
         {0.2, 2015.0, 2.0, 1.0},
         {0.3, 2017.0, 5.0, 0.0},
         {0.4, std::nullopt, 9.0, 1.0}, // missing year: skipped on that axis
         {0.5, 2017.0, 0.0, 0.0}});     // zero devs folds into the "1" bin

    auto years = stats::cohort_split(t, stats::CohortAxis::YearCreation);
    REQUIRE(years.size() == 2);
    CHECK(years[0].first == "2015");
    CHECK(years[0].second.n_rows() == 2);
    CHECK(years[1].first == "2017");
    CHECK(years[1].second.n_rows() == 2);

    auto teams = stats::cohort_split(t, stats::CohortAxis::CoreTeamSize);
    REQUIRE(teams.size() == 3); // bins present: 1, 2, >=4
    CHECK(teams[0].first == "1");
    CHECK(teams[0].second.n_rows() == 2);
    CHECK(teams[1].first == "2");
    CHECK(teams[2].first == ">=4");
    CHECK(teams[2].second.n_rows() == 2);

    auto owners = stats::cohort_split(t, stats::CohortAxis::Ownership);
    REQUIRE(owners.size() == 2);
    CHECK(owners[0].first == "user");
    CHECK(owners[0].second.n_rows() == 3);
    CHECK(owners[1].first == "organization");
}

TEST_CASE("regression table renders coefficients, stars and footer") {
    std::mt19937_64 gen(61);
    std::vector<std::vector<std::optional<double>>> rows;
    for (int i = 0; i < 200; ++i) {
        double x = rng::gaussian(gen);
        double year = 2014.0 + static_cast<double>(rng::uniform_index(gen, 2));
        rows.push_back({1.0 * x + 0.05 * rng::gaussian(gen), x, year});
    }
    stats::DataTable t = table_from({"y", "x", "year"}, rows);
    stats::RegressionResult r = stats::ols_fixed_effects(t, {"y", {"x"}, "year"});
    std::string table = stats::render_regression_table({{"Model X", r}});

    CHECK(table.find("Model X") != std::string::npos);
    CHECK(table.find("***") != std::string::npos);        // x is overwhelming
    CHECK(table.find("(") != std::string::npos);          // SE line
    CHECK(table.find("year fixed effects") != std::string::npos);
    CHECK(table.find("Yes") != std::string::npos);
    CHECK(table.find("observations") != std::string::npos);
    CHECK(table.find("200") != std::string::npos);
    CHECK(table.find("adjusted R2") != std::string::npos);
    CHECK(table.find("year_2015") == std::string::npos);  // dummies collapsed
}
