#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ravenbench::errstats {

struct Participant {
    std::string id;
    std::string group;
    double age = 0.0;
    double education_years = 0.0;
    double premorbid_score = 0.0;
    std::string sex;
    std::vector<int> responses;  // chosen option 0..7 per item
};

struct ResponseTable {
    int n_items = 0;
    std::vector<Participant> rows;
    int excluded_incomplete = 0;  // rows dropped on read

    ResponseTable filter_group(const std::string& group) const;
    std::vector<std::string> groups() const;  // sorted, unique
};

// Cohort CSV: participant_id, group, age, education_years, premorbid_score,
// sex, item_1..item_N. Rows with a blank or NA response are excluded.
ResponseTable read_cohort_csv(const std::filesystem::path& path);
void write_cohort_csv(const std::filesystem::path& path, const ResponseTable& table);

struct ErrorGrid {
    std::vector<int> item_order;                   // item indices, decreasing reference success
    std::vector<std::array<int, 8>> option_order;  // per ordered row, decreasing reference frequency
    std::vector<std::array<int, 8>> counts;        // [row][column] under both orderings
    int group_size = 0;
};

// Orderings come from `reference`; ties fall back to the original index.
// Throws Error(item_mismatch) when the tables or key disagree on item count.
ErrorGrid build_error_grid(const ResponseTable& table, const ResponseTable& reference,
                           std::span<const int> answer_key);

void write_error_grid_csv(const std::filesystem::path& path, const ErrorGrid& grid);

struct ZTest {
    double z = 0.0;
    double p = 1.0;
};
ZTest ztest_two_proportions(int k1, int n1, int k2, int n2);

struct FdrResult {
    std::vector<bool> reject;
    std::vector<double> adjusted;
};
// Benjamini-Yekutieli step-up.
FdrResult fdr_by(std::span<const double> pvals, double alpha = 0.05);

struct Chi2Result {
    double chi2 = 0.0;
    int dof = 0;
    double p = 1.0;
    bool small_expected = false;  // some expected count < 5
};
// Throws Error(zero_margin) when a row or column sums to zero.
Chi2Result chi2_contingency(const std::vector<std::vector<double>>& table);

struct MannWhitney {
    double u = 0.0;  // for sample a
    double p = 1.0;
    bool exact = false;
};
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct CellTest {
    int item = 0;    // original item index
    int option = 0;  // original option index
    int row = 0;     // position under the grid ordering
    int column = 0;
    double z = 0.0;
    double p = 1.0;
    double p_adjusted = 1.0;
    bool rejected = false;
};

struct CellTestReport {
    std::vector<CellTest> tests;
    int skipped = 0;  // cells where both groups have zero selections
    double alpha = 0.05;
};

// Per-cell z-tests between two grids built on the same reference ordering,
// BY-corrected over all non-skipped cells.
CellTestReport grid_cell_tests(const ErrorGrid& a, const ErrorGrid& b, double alpha = 0.05);
void write_cell_tests_csv(const std::filesystem::path& path, const CellTestReport& report);

struct CovariateTest {
    std::string covariate;
    std::string test;  // "chi2" or "mann_whitney"
    std::optional<double> statistic;
    std::optional<double> p;
    double p_adjusted = 1.0;
    bool rejected = false;
    std::string note;
};

struct OverlapReport {
    int sharers = 0;
    int non_sharers = 0;
    std::vector<std::pair<int, int>> model_errors;  // (item, option)
    std::vector<CovariateTest> tests;
    double alpha = 0.05;
};

// Splits participants by whether they share any (item, wrong option) with the
// model and tests covariates across the split. Throws Error(no_model_errors)
// when the model made none.
OverlapReport model_error_overlap(std::span<const int> model_choices, std::span<const int> answer_key,
                                  const ResponseTable& cohort, double alpha = 0.05);

nlohmann::json to_json(const OverlapReport& report);

}  // namespace ravenbench::errstats
