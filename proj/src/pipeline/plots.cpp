#include "ravenbench/pipeline.hpp"

#include "io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace ravenbench::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Frame {
    double left = 60, top = 20, width = 520, height = 320;
    double x_lo = 0.5, x_hi = 12.5;
    double px(double x) const { return left + (x - x_lo) / (x_hi - x_lo) * width; }
    double py(double y) const { return top + (1.0 - y) * height; }
};

// Pointwise central band of psi over the posterior at each x.
std::pair<std::vector<double>, std::vector<double>> psi_band(const psychfit::PsychPosterior& post,
                                                             const std::vector<double>& xs, double level) {
    std::vector<double> lo, hi;
    std::vector<std::pair<double, double>> vals;
    for (double x : xs) {
        vals.clear();
        for (std::size_t i = 0; i < post.m_axis.size(); ++i)
            for (std::size_t j = 0; j < post.s_axis.size(); ++j)
                for (std::size_t l = 0; l < post.lambda_axis.size(); ++l) {
                    const double w = post.at(i, j, l);
                    if (w < 1e-12) continue;
                    vals.emplace_back(psychfit::psi(x, {post.m_axis[i], post.s_axis[j], post.lambda_axis[l]}), w);
                }
        std::sort(vals.begin(), vals.end());
        double total = 0.0;
        for (const auto& v : vals) total += v.second;
        const double qlo = (1.0 - level) / 2.0 * total, qhi = (1.0 + level) / 2.0 * total;
        double cum = 0.0, a = vals.empty() ? 0.0 : vals.front().first, b = vals.empty() ? 0.0 : vals.back().first;
        bool got_a = false;
        for (const auto& v : vals) {
            cum += v.second;
            if (!got_a && cum >= qlo) {
                a = v.first;
                got_a = true;
            }
            if (cum >= qhi) {
                b = v.first;
                break;
            }
        }
        lo.push_back(a);
        hi.push_back(b);
    }
    return {lo, hi};
}

std::string axes(const Frame& f, int n_ranks) {
    std::string s;
    s += fmt::format(R"svg(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>)svg" "\n", f.left, f.top, f.width, f.height);
    for (int r = 1; r <= n_ranks; ++r) {
        s += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="middle">{}</text>)svg" "\n", f.px(r),
                         f.top + f.height + 15, r);
    }
    for (int k = 0; k <= 4; ++k) {
        const double y = k / 4.0;
        s += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="end">{:.2f}</text>)svg" "\n", f.left - 6,
                         f.py(y) + 4, y);
        s += fmt::format(R"svg(<line x1="{}" x2="{}" y1="{:.1f}" y2="{:.1f}" stroke="#ddd"/>)svg" "\n", f.left, f.left + f.width,
                         f.py(y), f.py(y));
    }
    s += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle">item difficulty rank</text>)svg" "\n",
                     f.left + f.width / 2, f.top + f.height + 32);
    s += fmt::format(R"svg(<text x="14" y="{:.1f}" font-size="12" transform="rotate(-90 14 {:.1f})" text-anchor="middle">proportion correct</text>)svg" "\n",
                     f.top + f.height / 2, f.top + f.height / 2);
    return s;
}

std::string heat_table(const std::string& title, const std::vector<std::string>& row_labels,
                       const std::vector<std::array<int, 8>>& counts) {
    const double cell = 28, left = 70, top = 40;
    int peak = 1;
    for (const auto& r : counts)
        for (int v : r) peak = std::max(peak, v);
    std::string s = fmt::format(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">)svg" "\n",
                                left + 8 * cell + 20, top + counts.size() * cell + 20);
    s += fmt::format(R"svg(<text x="{}" y="20" font-size="13">{}</text>)svg" "\n", left, title);
    for (int c = 0; c < 8; ++c) {
        s += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="middle">{}</text>)svg" "\n",
                         left + c * cell + cell / 2, top - 4, c + 1);
    }
    for (std::size_t r = 0; r < counts.size(); ++r) {
        s += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="end">{}</text>)svg" "\n", left - 6,
                         top + r * cell + cell / 2 + 4, row_labels[r]);
        for (int c = 0; c < 8; ++c) {
            const int v = counts[r][static_cast<std::size_t>(c)];
            const int shade = 255 - static_cast<int>(std::lround(200.0 * v / peak));
            s += fmt::format(R"svg(<rect x="{:.1f}" y="{:.1f}" width="{}" height="{}" fill="rgb(255,{},{})" stroke="#999"/>)svg",
                             left + c * cell, top + r * cell, cell, cell, shade, shade);
            s += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="9" text-anchor="middle">{}</text>)svg" "\n",
                             left + c * cell + cell / 2, top + r * cell + cell / 2 + 3, v);
        }
    }
    s += "</svg>\n";
    return s;
}

// Grid CSVs written by `errors`: row,item,option_1,count_1,...
struct GridRows {
    std::vector<std::string> labels;
    std::vector<std::array<int, 8>> counts;
};

GridRows grid_rows(const fs::path& csv) {
    std::istringstream in(detail::read_text(csv));
    std::string line;
    std::getline(in, line);
    GridRows g;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<int> v;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) v.push_back(std::stoi(c));
        if (v.size() != 18) throw Error(ErrorKind::io, "malformed grid row in " + csv.string());
        g.labels.push_back(fmt::format("item {}", v[1]));
        std::array<int, 8> row{};
        for (std::size_t c = 0; c < 8; ++c) row[c] = v[3 + 2 * c];
        g.counts.push_back(row);
    }
    return g;
}

}  // namespace

std::vector<fs::path> emit_plots(const std::vector<fs::path>& run_dirs, const fs::path& out_dir,
                                 std::vector<std::string>* notices) {
    auto notice = [&](const std::string& msg) {
        if (notices) notices->push_back(msg);
    };
    fs::create_directories(out_dir);
    std::vector<fs::path> written;

    struct Curve {
        std::string label;
        std::vector<psychfit::TrialBlock> trials;
        psychfit::PsychPosterior post;
        std::optional<psychfit::Interval> threshold;
    };
    std::vector<Curve> curves;
    int n_ranks = 0;
    for (const auto& dir : run_dirs) {
        const auto run = detail::load_run(dir);
        const std::string label = fmt::format("{} ({})", run.report.at("substrate").get<std::string>(),
                                              run.report.at("score").at("line").get<std::string>());
        auto trials = psychfit::read_trials_csv(dir / "trials.csv");
        if (std::none_of(trials.begin(), trials.end(), [](const auto& t) { return t.n > 0; })) {
            notice(fmt::format("{}: no trials; psychometric curve omitted", dir.string()));
            continue;
        }
        Curve c{label, trials, {}, std::nullopt};
        try {
            c.post = psychfit::fit(trials, run.config.grid);
            c.threshold = psychfit::threshold_interval(c.post, run.config.performance, run.config.level);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::unattainable) throw;
            notice(fmt::format("{}: {}", dir.string(), e.what()));
            if (e.kind() == ErrorKind::insufficient_data) continue;
        }
        n_ranks = std::max(n_ranks, static_cast<int>(run.manifest.items.size()));
        curves.push_back(std::move(c));

        const fs::path grid_dir = dir / "errors";
        if (fs::is_directory(grid_dir)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(grid_dir))
                if (e.path().extension() == ".csv" && e.path().stem().string().rfind("grid_", 0) == 0) files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                const auto g = grid_rows(f);
                const fs::path svg = out_dir / fmt::format("{}_{}.svg", dir.filename().string(), f.stem().string());
                detail::write_text(svg, heat_table(fmt::format("{} {}", label, f.stem().string()), g.labels, g.counts));
                written.push_back(svg);
            }
        }
    }
    if (curves.empty()) {
        notice("no run has trials; psychometric plot omitted");
        return written;
    }

    Frame f;
    f.x_hi = n_ranks + 0.5;
    std::string svg = fmt::format(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">)svg" "\n",
                                  f.left + f.width + 20, f.top + f.height + 50 + 18 * curves.size());
    svg += axes(f, n_ranks);
    std::vector<double> xs;
    for (int k = 0; k <= 100; ++k) xs.push_back(0.5 + (n_ranks) * k / 100.0);
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& cv = curves[c];
        const char* colour = kPalette[c % std::size(kPalette)];
        if (cv.threshold) {
            const double a = std::clamp(cv.threshold->lo, f.x_lo, f.x_hi), b = std::clamp(cv.threshold->hi, f.x_lo, f.x_hi);
            svg += fmt::format(R"svg(<rect x="{:.2f}" y="{}" width="{:.2f}" height="{}" fill="{}" fill-opacity="0.12"/>)svg" "\n",
                               f.px(a), f.top, std::max(1.0, f.px(b) - f.px(a)), f.height, colour);
        }
        const auto [lo, hi] = psi_band(cv.post, xs, 0.95);
        std::string band = "M";
        for (std::size_t k = 0; k < xs.size(); ++k) band += fmt::format(" {:.2f},{:.2f}", f.px(xs[k]), f.py(hi[k]));
        for (std::size_t k = xs.size(); k-- > 0;) band += fmt::format(" {:.2f},{:.2f}", f.px(xs[k]), f.py(lo[k]));
        svg += fmt::format(R"svg(<path d="{} Z" fill="{}" fill-opacity="0.2" stroke="none"/>)svg" "\n", band, colour);
        std::string line = "M";
        for (double x : xs) line += fmt::format(" {:.2f},{:.2f}", f.px(x), f.py(psychfit::psi(x, cv.post.map)));
        svg += fmt::format(R"svg(<path d="{}" fill="none" stroke="{}" stroke-width="2"/>)svg" "\n", line, colour);
        for (const auto& t : cv.trials) {
            if (t.n == 0) continue;
            svg += fmt::format(R"svg(<circle cx="{:.2f}" cy="{:.2f}" r="4" fill="{}"/>)svg" "\n", f.px(t.x),
                               f.py(static_cast<double>(t.k) / t.n), colour);
        }
        svg += fmt::format(R"svg(<text x="{}" y="{:.1f}" font-size="12" fill="{}">{}</text>)svg" "\n", f.left,
                           f.top + f.height + 50 + 18 * c, colour, cv.label);
    }
    svg += "</svg>\n";
    const fs::path p = out_dir / "psychometric.svg";
    detail::write_text(p, svg);
    written.push_back(p);
    return written;
}

}  // namespace ravenbench::pipeline
