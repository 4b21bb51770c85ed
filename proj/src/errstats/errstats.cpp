#include "ravenbench/errstats.hpp"

#include "ravenbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

namespace ravenbench::errstats {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

double parse_number(const std::string& s, const std::string& what, int lineno) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::invalid_argument, fmt::format("cohort line {}: {} '{}' is not a number", lineno, what, s));
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Number of arrangements giving each U for samples of sizes m and n (exact).
std::vector<double> u_distribution(int m, int n) {
    // counts[k][u]: ways to place k of the first t items from sample a.
    const int umax = m * n;
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(m) + 1,
                                            std::vector<double>(static_cast<std::size_t>(umax) + 1, 0.0));
    counts[0][0] = 1.0;
    for (int t = 1; t <= m + n; ++t) {
        for (int k = std::min(m, t); k >= 1; --k) {
            const int before_b = (t - 1) - (k - 1);  // items from b already placed
            if (before_b > n) continue;
            auto& dst = counts[static_cast<std::size_t>(k)];
            const auto& src = counts[static_cast<std::size_t>(k) - 1];
            for (int u = umax; u >= before_b; --u) dst[static_cast<std::size_t>(u)] += src[static_cast<std::size_t>(u - before_b)];
        }
        // Placing a b item leaves counts unchanged, but only while b has room.
        for (int k = 0; k <= std::min(m, t); ++k) {
            if (t - k > n) std::fill(counts[static_cast<std::size_t>(k)].begin(), counts[static_cast<std::size_t>(k)].end(), 0.0);
        }
    }
    return counts[static_cast<std::size_t>(m)];
}

}  // namespace

ResponseTable ResponseTable::filter_group(const std::string& group) const {
    ResponseTable out;
    out.n_items = n_items;
    for (const auto& r : rows)
        if (r.group == group) out.rows.push_back(r);
    return out;
}

std::vector<std::string> ResponseTable::groups() const {
    std::set<std::string> g;
    for (const auto& r : rows) g.insert(r.group);
    return {g.begin(), g.end()};
}

ResponseTable read_cohort_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read cohort " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::invalid_argument, "cohort CSV is empty");
    const auto header = split_csv_line(line);
    static const std::vector<std::string> fixed{"participant_id", "group", "age", "education_years", "premorbid_score", "sex"};
    if (header.size() < fixed.size() + 1 || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
        throw Error(ErrorKind::invalid_argument,
                    "cohort CSV header must start with participant_id,group,age,education_years,premorbid_score,sex");
    }
    ResponseTable table;
    table.n_items = static_cast<int>(header.size() - fixed.size());
    for (int i = 0; i < table.n_items; ++i) {
        if (header[fixed.size() + static_cast<std::size_t>(i)] != fmt::format("item_{}", i + 1)) {
            throw Error(ErrorKind::invalid_argument, fmt::format("cohort CSV column {} must be item_{}", fixed.size() + i + 1, i + 1));
        }
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::invalid_argument, fmt::format("cohort line {}: expected {} fields, got {}", lineno,
                                                                 header.size(), cells.size()));
        }
        Participant p;
        p.id = cells[0];
        p.group = cells[1];
        p.age = parse_number(cells[2], "age", lineno);
        p.education_years = parse_number(cells[3], "education_years", lineno);
        p.premorbid_score = parse_number(cells[4], "premorbid_score", lineno);
        p.sex = cells[5];
        bool complete = true;
        for (int i = 0; i < table.n_items; ++i) {
            const auto& c = cells[fixed.size() + static_cast<std::size_t>(i)];
            if (c.empty() || c == "NA" || c == "na") {
                complete = false;
                break;
            }
            const double v = parse_number(c, "response", lineno);
            if (v != std::floor(v) || v < 0 || v > 7) {
                throw Error(ErrorKind::invalid_argument, fmt::format("cohort line {}: response {} outside 0..7", lineno, c));
            }
            p.responses.push_back(static_cast<int>(v));
        }
        if (!complete) {
            ++table.excluded_incomplete;
            continue;
        }
        table.rows.push_back(std::move(p));
    }
    return table;
}

void write_cohort_csv(const std::filesystem::path& path, const ResponseTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "participant_id,group,age,education_years,premorbid_score,sex";
    for (int i = 0; i < table.n_items; ++i) out << ",item_" << i + 1;
    out << '\n';
    for (const auto& r : table.rows) {
        out << fmt::format("{},{},{},{},{},{}", r.id, r.group, r.age, r.education_years, r.premorbid_score, r.sex);
        for (int v : r.responses) out << ',' << v;
        out << '\n';
    }
}

ErrorGrid build_error_grid(const ResponseTable& table, const ResponseTable& reference, std::span<const int> answer_key) {
    const int n = reference.n_items;
    if (table.n_items != n || static_cast<int>(answer_key.size()) != n) {
        throw Error(ErrorKind::item_mismatch, fmt::format("item counts differ: table {}, reference {}, answer key {}",
                                                          table.n_items, n, answer_key.size()));
    }
    std::vector<std::array<int, 8>> ref_counts(static_cast<std::size_t>(n)), counts(static_cast<std::size_t>(n));
    for (auto& c : ref_counts) c.fill(0);
    for (auto& c : counts) c.fill(0);
    for (const auto& r : reference.rows)
        for (int i = 0; i < n; ++i) ++ref_counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(r.responses[static_cast<std::size_t>(i)])];
    for (const auto& r : table.rows)
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(r.responses[static_cast<std::size_t>(i)])];

    ErrorGrid grid;
    grid.group_size = static_cast<int>(table.rows.size());
    grid.item_order.resize(static_cast<std::size_t>(n));
    std::iota(grid.item_order.begin(), grid.item_order.end(), 0);
    auto success = [&](int i) {
        return ref_counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(answer_key[static_cast<std::size_t>(i)])];
    };
    std::stable_sort(grid.item_order.begin(), grid.item_order.end(), [&](int a, int b) { return success(a) > success(b); });
    for (int item : grid.item_order) {
        std::array<int, 8> order{};
        std::iota(order.begin(), order.end(), 0);
        const auto& rc = ref_counts[static_cast<std::size_t>(item)];
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return rc[static_cast<std::size_t>(a)] > rc[static_cast<std::size_t>(b)];
        });
        std::array<int, 8> row{};
        for (std::size_t c = 0; c < 8; ++c) row[c] = counts[static_cast<std::size_t>(item)][static_cast<std::size_t>(order[c])];
        grid.option_order.push_back(order);
        grid.counts.push_back(row);
    }
    return grid;
}

void write_error_grid_csv(const std::filesystem::path& path, const ErrorGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "row,item";
    for (int c = 1; c <= 8; ++c) out << ",option_" << c << ",count_" << c;
    out << '\n';
    for (std::size_t r = 0; r < grid.item_order.size(); ++r) {
        out << r + 1 << ',' << grid.item_order[r] + 1;
        for (std::size_t c = 0; c < 8; ++c) out << ',' << grid.option_order[r][c] << ',' << grid.counts[r][c];
        out << '\n';
    }
}

ZTest ztest_two_proportions(int k1, int n1, int k2, int n2) {
    if (n1 < 1 || n2 < 1 || k1 < 0 || k2 < 0 || k1 > n1 || k2 > n2) {
        throw Error(ErrorKind::invalid_argument, "z-test needs n >= 1 and 0 <= k <= n");
    }
    const double p1 = double(k1) / n1, p2 = double(k2) / n2;
    const double pooled = double(k1 + k2) / (n1 + n2);
    const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    if (pooled <= 0.0 || pooled >= 1.0 || var <= 0.0) return {0.0, 1.0};
    const double z = (p1 - p2) / std::sqrt(var);
    return {z, std::min(1.0, 2.0 * normal_sf(std::abs(z)))};
}

FdrResult fdr_by(std::span<const double> pvals, double alpha) {
    const std::size_t m = pvals.size();
    FdrResult out;
    out.reject.assign(m, false);
    out.adjusted.assign(m, 1.0);
    if (m == 0) return out;
    for (double p : pvals)
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::invalid_argument, "p-values must lie in [0, 1]");
    double cm = 0.0;
    for (std::size_t i = 1; i <= m; ++i) cm += 1.0 / static_cast<double>(i);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    std::size_t cutoff = 0;
    for (std::size_t j = 1; j <= m; ++j) {
        if (pvals[order[j - 1]] <= static_cast<double>(j) * alpha / (static_cast<double>(m) * cm)) cutoff = j;
    }
    for (std::size_t j = 1; j <= cutoff; ++j) out.reject[order[j - 1]] = true;
    double running = 1.0;
    for (std::size_t j = m; j >= 1; --j) {
        const double v = std::min(1.0, pvals[order[j - 1]] * static_cast<double>(m) * cm / static_cast<double>(j));
        running = std::min(running, v);
        out.adjusted[order[j - 1]] = running;
    }
    return out;
}

Chi2Result chi2_contingency(const std::vector<std::vector<double>>& table) {
    if (table.empty() || table.front().empty()) throw Error(ErrorKind::invalid_argument, "contingency table is empty");
    const std::size_t r = table.size(), c = table.front().size();
    std::vector<double> rows(r, 0.0), cols(c, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) throw Error(ErrorKind::invalid_argument, "contingency table is ragged");
        for (std::size_t j = 0; j < c; ++j) {
            if (!(table[i][j] >= 0.0)) throw Error(ErrorKind::invalid_argument, "contingency counts must be >= 0");
            rows[i] += table[i][j];
            cols[j] += table[i][j];
            total += table[i][j];
        }
    }
    for (double v : rows)
        if (v <= 0.0) throw Error(ErrorKind::zero_margin, "a contingency row sums to zero");
    for (double v : cols)
        if (v <= 0.0) throw Error(ErrorKind::zero_margin, "a contingency column sums to zero");
    Chi2Result res;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double expected = rows[i] * cols[j] / total;
            if (expected < 5.0) res.small_expected = true;
            const double d = table[i][j] - expected;
            res.chi2 += d * d / expected;
        }
    }
    res.dof = static_cast<int>((r - 1) * (c - 1));
    res.p = res.dof == 0 ? 1.0 : boost::math::gamma_q(res.dof / 2.0, res.chi2 / 2.0);
    return res;
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::invalid_argument, "Mann-Whitney needs two non-empty samples");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(n);
    for (double v : a) pooled.emplace_back(v, 0);
    for (double v : b) pooled.emplace_back(v, 1);
    std::sort(pooled.begin(), pooled.end());
    double rank_sum_a = 0.0, tie_term = 0.0;
    bool ties = false;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        const double t = static_cast<double>(j - i);
        const double midrank = (static_cast<double>(i) + 1.0 + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second == 0) rank_sum_a += midrank;
        if (t > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }
    MannWhitney res;
    res.u = rank_sum_a - static_cast<double>(na) * (na + 1) / 2.0;
    const double mean = static_cast<double>(na) * nb / 2.0;

    if (std::min(na, nb) <= 8 && !ties) {
        const int m = static_cast<int>(std::min(na, nb)), other = static_cast<int>(std::max(na, nb));
        const std::vector<double> dist = u_distribution(m, other);
        // U of the smaller sample has the same distribution as U of sample a
        // by symmetry about the mean.
        double total = 0.0;
        for (double v : dist) total += v;
        const auto u = static_cast<std::size_t>(std::lround(res.u));
        double lower = 0.0, upper = 0.0;
        for (std::size_t k = 0; k < dist.size(); ++k) {
            if (k <= u) lower += dist[k];
            if (k >= u) upper += dist[k];
        }
        res.p = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        res.exact = true;
        return res;
    }
    const double nn = static_cast<double>(n);
    const double var = static_cast<double>(na) * nb / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var <= 0.0) return res;  // all values tied: p = 1
    const double z = std::max(0.0, std::abs(res.u - mean) - 0.5) / std::sqrt(var);
    res.p = std::min(1.0, 2.0 * normal_sf(z));
    return res;
}

CellTestReport grid_cell_tests(const ErrorGrid& a, const ErrorGrid& b, double alpha) {
    if (a.item_order != b.item_order || a.option_order != b.option_order) {
        throw Error(ErrorKind::item_mismatch, "cell tests need grids built on the same reference ordering");
    }
    CellTestReport report;
    report.alpha = alpha;
    if (a.group_size < 1 || b.group_size < 1) {
        throw Error(ErrorKind::insufficient_data, "cell tests need both groups non-empty");
    }
    std::vector<double> pvals;
    for (std::size_t r = 0; r < a.counts.size(); ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
            const int k1 = a.counts[r][c], k2 = b.counts[r][c];
            if (k1 == 0 && k2 == 0) {
                ++report.skipped;
                continue;
            }
            const ZTest z = ztest_two_proportions(k1, a.group_size, k2, b.group_size);
            CellTest t;
            t.item = a.item_order[r];
            t.option = a.option_order[r][c];
            t.row = static_cast<int>(r);
            t.column = static_cast<int>(c);
            t.z = z.z;
            t.p = z.p;
            report.tests.push_back(t);
            pvals.push_back(z.p);
        }
    }
    const FdrResult fdr = fdr_by(pvals, alpha);
    for (std::size_t i = 0; i < report.tests.size(); ++i) {
        report.tests[i].p_adjusted = fdr.adjusted[i];
        report.tests[i].rejected = fdr.reject[i];
    }
    return report;
}

void write_cell_tests_csv(const std::filesystem::path& path, const CellTestReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "row,column,item,option,z,p,p_adjusted,rejected\n";
    for (const auto& t : report.tests) {
        out << fmt::format("{},{},{},{},{},{},{},{}\n", t.row + 1, t.column + 1, t.item + 1, t.option, t.z, t.p,
                           t.p_adjusted, t.rejected ? 1 : 0);
    }
}

OverlapReport model_error_overlap(std::span<const int> model_choices, std::span<const int> answer_key,
                                  const ResponseTable& cohort, double alpha) {
    const std::size_t n = answer_key.size();
    if (model_choices.size() != n || cohort.n_items != static_cast<int>(n)) {
        throw Error(ErrorKind::item_mismatch, "model choices, answer key and cohort disagree on item count");
    }
    OverlapReport report;
    report.alpha = alpha;
    for (std::size_t i = 0; i < n; ++i)
        if (model_choices[i] != answer_key[i]) report.model_errors.emplace_back(static_cast<int>(i), model_choices[i]);
    if (report.model_errors.empty()) throw Error(ErrorKind::no_model_errors, "the model answered every item correctly");

    std::vector<bool> shares;
    for (const auto& p : cohort.rows) {
        bool s = false;
        for (const auto& [item, option] : report.model_errors) s |= p.responses[static_cast<std::size_t>(item)] == option;
        shares.push_back(s);
        (s ? report.sharers : report.non_sharers) += 1;
    }

    auto categorical = [&](const std::string& name, auto key) {
        CovariateTest t{name, "chi2", std::nullopt, std::nullopt, 1.0, false, ""};
        std::map<std::string, std::array<double, 2>> cells;
        for (std::size_t i = 0; i < cohort.rows.size(); ++i) cells[key(cohort.rows[i])][shares[i] ? 0 : 1] += 1.0;
        std::vector<std::vector<double>> table;
        for (const auto& [level, c] : cells) table.push_back({c[0], c[1]});
        try {
            if (table.size() < 2) throw Error(ErrorKind::zero_margin, "only one level present");
            const Chi2Result r = chi2_contingency(table);
            t.statistic = r.chi2;
            t.p = r.p;
            if (r.small_expected) t.note = "expected count < 5 in some cell";
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::zero_margin) throw;
            t.note = std::string("not testable: ") + e.what();
        }
        report.tests.push_back(t);
    };
    auto continuous = [&](const std::string& name, auto value) {
        CovariateTest t{name, "mann_whitney", std::nullopt, std::nullopt, 1.0, false, ""};
        std::vector<double> a, b;
        for (std::size_t i = 0; i < cohort.rows.size(); ++i) (shares[i] ? a : b).push_back(value(cohort.rows[i]));
        if (a.empty() || b.empty()) {
            t.note = "not testable: one side of the split is empty";
        } else {
            const MannWhitney r = mann_whitney_u(a, b);
            t.statistic = r.u;
            t.p = r.p;
            if (r.exact) t.note = "exact";
        }
        report.tests.push_back(t);
    };
    categorical("group", [](const Participant& p) { return p.group; });
    categorical("sex", [](const Participant& p) { return p.sex; });
    continuous("age", [](const Participant& p) { return p.age; });
    continuous("education_years", [](const Participant& p) { return p.education_years; });
    continuous("premorbid_score", [](const Participant& p) { return p.premorbid_score; });

    std::vector<double> pvals;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < report.tests.size(); ++i) {
        if (report.tests[i].p) {
            pvals.push_back(*report.tests[i].p);
            idx.push_back(i);
        }
    }
    const FdrResult fdr = fdr_by(pvals, alpha);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        report.tests[idx[k]].p_adjusted = fdr.adjusted[k];
        report.tests[idx[k]].rejected = fdr.reject[k];
    }
    return report;
}

nlohmann::json to_json(const OverlapReport& report) {
    nlohmann::json j;
    j["alpha"] = report.alpha;
    j["sharers"] = report.sharers;
    j["non_sharers"] = report.non_sharers;
    j["model_errors"] = nlohmann::json::array();
    for (const auto& [item, option] : report.model_errors) j["model_errors"].push_back({{"item", item + 1}, {"option", option}});
    j["tests"] = nlohmann::json::array();
    for (const auto& t : report.tests) {
        nlohmann::json e{{"covariate", t.covariate}, {"test", t.test}, {"p_adjusted", t.p_adjusted}, {"rejected", t.rejected}};
        e["statistic"] = t.statistic ? nlohmann::json(*t.statistic) : nlohmann::json(nullptr);
        e["p"] = t.p ? nlohmann::json(*t.p) : nlohmann::json(nullptr);
        if (!t.note.empty()) e["note"] = t.note;
        j["tests"].push_back(e);
    }
    return j;
}

}  // namespace ravenbench::errstats
