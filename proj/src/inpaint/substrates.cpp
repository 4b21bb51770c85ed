#include "ravenbench/error.hpp"
#include "ravenbench/inpaint.hpp"

#include <atomic>

#include <fmt/format.h>

namespace ravenbench::inpaint {

std::vector<InpaintResult> Substrate::inpaint_batch(std::span<const InpaintRequest> requests) const {
    std::vector<InpaintResult> out;
    out.reserve(requests.size());
    for (const auto& r : requests) out.push_back(inpaint(r));
    return out;
}

namespace {

class LocalSubstrate final : public Substrate {
public:
    explicit LocalSubstrate(LocalConfig cfg) : cfg_(cfg) {}
    std::string name() const override { return "local"; }
    InpaintResult inpaint(const InpaintRequest& r) const override { return inpaint_local(r, cfg_); }

private:
    LocalConfig cfg_;
};

class LatticeSubstrate final : public Substrate {
public:
    explicit LatticeSubstrate(LatticeConfig cfg) : cfg_(cfg) {}
    std::string name() const override { return "lattice"; }
    InpaintResult inpaint(const InpaintRequest& r) const override { return inpaint_lattice(r, cfg_); }

private:
    LatticeConfig cfg_;
};

class ExternalSubstrate final : public Substrate {
public:
    ExternalSubstrate(ExternalConfig cfg, std::filesystem::path work_dir)
        : cfg_(std::move(cfg)), work_dir_(std::move(work_dir)) {}
    std::string name() const override { return "external"; }
    bool thread_safe() const override { return false; }

    InpaintResult inpaint(const InpaintRequest& r) const override {
        return inpaint_batch(std::span<const InpaintRequest>(&r, 1)).front();
    }

    std::vector<InpaintResult> inpaint_batch(std::span<const InpaintRequest> requests) const override {
        const auto dir = work_dir_ / fmt::format("batch_{:03d}", batch_.fetch_add(1));
        std::filesystem::remove_all(dir);
        write_case_dir(dir, requests, 1);
        auto cases = run_external(dir, cfg_);
        std::vector<InpaintResult> out;
        out.reserve(cases.size());
        for (auto& c : cases) out.push_back(std::move(c.result));
        return out;
    }

private:
    ExternalConfig cfg_;
    std::filesystem::path work_dir_;
    mutable std::atomic<int> batch_{1};
};

class PasteSubstrate final : public Substrate {
public:
    explicit PasteSubstrate(GrayImage truth) : truth_(std::move(truth)) {}
    std::string name() const override { return "paste"; }
    InpaintResult inpaint(const InpaintRequest& r) const override {
        validate(r);
        if (!truth_.same_shape(r.image)) throw Error(ErrorKind::dimension_mismatch, "truth image has wrong size");
        InpaintResult out;
        out.image = r.image;
        for (int y = 0; y < r.image.height(); ++y)
            for (int x = 0; x < r.image.width(); ++x)
                if (r.mask.test(x, y)) out.image.at(x, y) = truth_.at(x, y);
        out.substrate_id = "paste";
        return out;
    }

private:
    GrayImage truth_;
};

class ConstantSubstrate final : public Substrate {
public:
    explicit ConstantSubstrate(std::uint8_t level) : level_(level) {}
    std::string name() const override { return "constant"; }
    InpaintResult inpaint(const InpaintRequest& r) const override {
        validate(r);
        InpaintResult out;
        out.image = r.image;
        for (int y = 0; y < r.image.height(); ++y)
            for (int x = 0; x < r.image.width(); ++x)
                if (r.mask.test(x, y)) out.image.at(x, y) = level_;
        out.substrate_id = "constant";
        return out;
    }

private:
    std::uint8_t level_;
};

}  // namespace

std::unique_ptr<Substrate> make_local_substrate(const LocalConfig& cfg) { return std::make_unique<LocalSubstrate>(cfg); }
std::unique_ptr<Substrate> make_lattice_substrate(const LatticeConfig& cfg) {
    return std::make_unique<LatticeSubstrate>(cfg);
}
std::unique_ptr<Substrate> make_external_substrate(const ExternalConfig& cfg, std::filesystem::path work_dir) {
    return std::make_unique<ExternalSubstrate>(cfg, std::move(work_dir));
}
std::unique_ptr<Substrate> make_paste_substrate(GrayImage truth) {
    return std::make_unique<PasteSubstrate>(std::move(truth));
}
std::unique_ptr<Substrate> make_constant_substrate(std::uint8_t level) {
    return std::make_unique<ConstantSubstrate>(level);
}

}  // namespace ravenbench::inpaint
