#include "ravenbench/ravenbench.h"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& root() {
    static const fs::path r = [] {
        const fs::path d = fs::temp_directory_path() / "rb_capi";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return r;
}

fs::path config(const std::string& name, const std::string& body) {
    const fs::path p = root() / (name + ".toml");
    std::ofstream(p) << body;
    return p;
}

std::string small(const std::string& out, int seed) {
    return "seed = " + std::to_string(seed) + "\nitems = 3\nreps = 2\noutput = \"" + out +
           "\"\n[substrate]\nkind = \"oracle\"\n";
}

}  // namespace

TEST(CApi, Version) {
    ASSERT_NE(rb_version(), nullptr);
    EXPECT_GT(std::strlen(rb_version()), 0u);
}

TEST(CApi, Battery) {
    rb_battery* b = nullptr;
    ASSERT_EQ(rb_battery_generate(0, 12, &b), RB_OK);
    EXPECT_EQ(rb_battery_size(b), 12);
    EXPECT_EQ(std::strlen(rb_battery_hash(b)), 16u);
    for (int i = 0; i < 12; ++i) {
        EXPECT_GE(rb_battery_answer(b, i), 0);
        EXPECT_LE(rb_battery_answer(b, i), 7);
        EXPECT_EQ(rb_battery_rank(b, i), i + 1);
    }
    EXPECT_EQ(rb_battery_answer(b, 12), -1);
    EXPECT_EQ(rb_battery_rank(b, -1), -1);

    rb_battery* again = nullptr;
    ASSERT_EQ(rb_battery_generate(0, 12, &again), RB_OK);
    EXPECT_STREQ(rb_battery_hash(b), rb_battery_hash(again));
    rb_battery_free(again);

    ASSERT_EQ(rb_battery_write(b, (root() / "battery").c_str()), RB_OK);
    EXPECT_TRUE(fs::exists(root() / "battery" / "manifest.json"));
    rb_battery_free(b);
}

TEST(CApi, ArgumentErrors) {
    EXPECT_EQ(rb_battery_generate(0, 12, nullptr), RB_ERR_ARGUMENT);
    EXPECT_GT(std::strlen(rb_last_error()), 0u);
    EXPECT_EQ(rb_battery_size(nullptr), 0);
    EXPECT_EQ(rb_battery_write(nullptr, "/tmp"), RB_ERR_ARGUMENT);
    EXPECT_EQ(rb_evaluate(nullptr, 1, nullptr), RB_ERR_ARGUMENT);
    EXPECT_EQ(rb_run_choice(nullptr, 0), -1);
    rb_battery_free(nullptr);
    rb_run_free(nullptr);
}

TEST(CApi, ConfigError) {
    rb_run* run = nullptr;
    EXPECT_EQ(rb_evaluate(config("bad", "items = 3\n").c_str(), 0, &run), RB_ERR_CONFIG);
    EXPECT_EQ(run, nullptr);
    EXPECT_STREQ(rb_last_error_kind(), "ConfigError");
    rb_battery* b = nullptr;
    EXPECT_EQ(rb_battery_generate(0, 2, &b), RB_ERR_ARGUMENT);
    EXPECT_EQ(b, nullptr);
}

TEST(CApi, EvaluateCompareAndPlots) {
    rb_run* run = nullptr;
    ASSERT_EQ(rb_evaluate(config("a", small("a", 0)).c_str(), 2, &run), RB_OK) << rb_last_error();
    int correct = -1, total = -1;
    ASSERT_EQ(rb_run_score(run, &correct, &total), RB_OK);
    EXPECT_EQ(correct, 3);
    EXPECT_EQ(total, 3);

    rb_battery* b = nullptr;
    ASSERT_EQ(rb_battery_generate(0, 3, &b), RB_OK);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(rb_run_choice(run, i), rb_battery_answer(b, i));
    rb_battery_free(b);

    const std::string dir = rb_run_dir(run);
    rb_run* reopened = nullptr;
    ASSERT_EQ(rb_run_open(dir.c_str(), &reopened), RB_OK);
    int c2 = -1, t2 = -1;
    rb_run_score(reopened, &c2, &t2);
    EXPECT_EQ(c2, correct);
    EXPECT_EQ(rb_run_boundary_warning(reopened), rb_run_boundary_warning(run));
    rb_run_free(reopened);
    EXPECT_EQ(rb_psych(dir.c_str()), RB_OK);

    rb_run* other = nullptr;
    ASSERT_EQ(rb_evaluate(config("b", small("b", 1)).c_str(), 0, &other), RB_OK);
    const fs::path cmp = root() / "cmp.json";
    EXPECT_EQ(rb_compare(dir.c_str(), dir.c_str(), nullptr, cmp.c_str()), RB_OK);
    EXPECT_TRUE(fs::exists(cmp));
    EXPECT_EQ(rb_compare(dir.c_str(), rb_run_dir(other), nullptr, cmp.c_str()), RB_ERR_BATTERY_MISMATCH);
    EXPECT_STREQ(rb_last_error_kind(), "BatteryMismatch");

    const char* dirs[] = {dir.c_str(), rb_run_dir(other)};
    EXPECT_EQ(rb_plots(dirs, 2, (root() / "plots").c_str()), RB_OK);
    EXPECT_TRUE(fs::exists(root() / "plots" / "psychometric.svg"));
    EXPECT_EQ(rb_run_open((root() / "missing").c_str(), &reopened), RB_ERR_STAGE);
    rb_run_free(other);
    rb_run_free(run);
}
