#include "ravenbench/error.hpp"
#include "ravenbench/inpaint.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include <fmt/format.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace ravenbench::inpaint {

namespace fs = std::filesystem;

namespace {

std::mutex& directory_lock(const fs::path& dir) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::mutex> locks;
    std::lock_guard lock(registry_mutex);
    std::error_code ec;
    fs::path key = fs::weakly_canonical(dir, ec);
    if (ec) key = fs::absolute(dir);
    return locks[key.string()];
}

std::vector<int> list_items(const fs::path& dir) {
    static const std::regex pattern(R"(item_(\d{3,})_image\.png)");
    std::vector<int> items;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) items.push_back(std::stoi(m[1].str()));
    }
    std::sort(items.begin(), items.end());
    return items;
}

int run_child(const std::vector<std::string>& command, const fs::path& dir, const ExternalConfig& cfg) {
    std::vector<std::string> args = command;
    args.push_back(dir.string());
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
    if (rc != 0) {
        throw Error(ErrorKind::external_failure, fmt::format("cannot start '{}': {}", args[0], std::strerror(rc)));
    }

    const auto start = std::chrono::steady_clock::now();
    const auto interval = std::chrono::duration<double>(cfg.poll_interval_seconds);
    for (;;) {
        int status = 0;
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) {
            if (WIFEXITED(status)) return WEXITSTATUS(status);
            return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
        }
        if (done < 0 && errno != EINTR) {
            throw Error(ErrorKind::external_failure, "lost track of the in-painter process");
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > cfg.timeout_seconds) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw Error(ErrorKind::timeout, fmt::format("in-painter exceeded {:.1f} s on {}", cfg.timeout_seconds,
                                                        dir.string()));
        }
        std::this_thread::sleep_for(interval);
    }
}

}  // namespace

std::string case_file(int item, const char* suffix) { return fmt::format("item_{:03d}_{}.png", item, suffix); }

void write_case_dir(const fs::path& dir, std::span<const InpaintRequest> requests, int first) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < requests.size(); ++i) {
        validate(requests[i]);
        const int item = first + static_cast<int>(i);
        write_png(dir / case_file(item, "image"), requests[i].image);
        write_png(dir / case_file(item, "mask"), requests[i].mask.to_image());
    }
}

std::vector<ExternalCase> run_external(const fs::path& case_dir, const ExternalConfig& cfg) {
    if (cfg.command.empty()) throw Error(ErrorKind::config, "external in-painter command is empty");
    if (!(cfg.timeout_seconds > 0.0) || !(cfg.poll_interval_seconds > 0.0)) {
        throw Error(ErrorKind::config, "timeout and poll interval must be positive");
    }
    if (!fs::is_directory(case_dir)) throw Error(ErrorKind::io, "no case directory " + case_dir.string());

    std::lock_guard serial(directory_lock(case_dir));
    const std::vector<int> items = list_items(case_dir);
    if (items.empty()) throw Error(ErrorKind::invalid_argument, "case directory has no item images");
    for (int item : items) {
        if (!fs::exists(case_dir / case_file(item, "mask"))) {
            throw Error(ErrorKind::invalid_argument, "missing " + case_file(item, "mask"));
        }
        std::error_code ec;
        fs::remove(case_dir / case_file(item, "result"), ec);
    }

    const auto start = std::chrono::steady_clock::now();
    const int exit_code = run_child(cfg.command, case_dir, cfg);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::vector<ExternalCase> cases;
    for (int item : items) {
        const fs::path result_path = case_dir / case_file(item, "result");
        if (!fs::exists(result_path)) {
            throw Error(ErrorKind::missing_result,
                        fmt::format("item {:03d}: no result (in-painter exit code {})", item, exit_code));
        }
    }
    if (exit_code != 0) {
        throw Error(ErrorKind::external_failure, fmt::format("in-painter exited with code {}", exit_code));
    }
    for (int item : items) {
        const GrayImage input = read_png(case_dir / case_file(item, "image"));
        const Mask mask = Mask::from_image(read_png(case_dir / case_file(item, "mask")));
        GrayImage output = read_png(case_dir / case_file(item, "result"));
        if (!output.same_shape(input) || mask.width() != input.width() || mask.height() != input.height()) {
            throw Error(ErrorKind::dimension_mismatch, fmt::format("item {:03d}: result is {}x{}, input {}x{}", item,
                                                                   output.width(), output.height(), input.width(),
                                                                   input.height()));
        }
        int worst = 0;
        for (int y = 0; y < input.height(); ++y) {
            for (int x = 0; x < input.width(); ++x) {
                if (mask.test(x, y)) continue;
                worst = std::max(worst, std::abs(int(output.at(x, y)) - int(input.at(x, y))));
            }
        }
        if (worst > cfg.unmasked_tolerance) {
            throw Error(ErrorKind::unmasked_pixels_modified,
                        fmt::format("item {:03d}: unmasked pixel changed by {} gray levels", item, worst));
        }
        ExternalCase c;
        c.item = item;
        c.result.image = std::move(output);
        c.result.substrate_id = "external";
        c.result.elapsed_seconds = elapsed / static_cast<double>(items.size());
        cases.push_back(std::move(c));
    }
    return cases;
}

}  // namespace ravenbench::inpaint
