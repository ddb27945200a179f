#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "arsent/config.hpp"
#include "arsent/mask.hpp"
#include "arsent/rng.hpp"
#include "arsent/synth.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "arsent-test") {
        std::string tmpl = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Per-pixel reference implementations.
inline std::uint64_t naive_area(const arsent::RasterMask& m) {
    std::uint64_t n = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) n += m.get(x, y) ? 1 : 0;
    return n;
}

inline std::uint64_t naive_intersection(const arsent::RasterMask& a, const arsent::RasterMask& b) {
    std::uint64_t n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) n += (a.get(x, y) && b.get(x, y)) ? 1 : 0;
    return n;
}

/// Random mask mixing noise and rectangles so both sparse and dense words occur.
inline arsent::RasterMask random_mask(arsent::Rng& rng, int w, int h) {
    arsent::RasterMask m(w, h);
    const auto style = rng.below(4);
    if (style == 0) {
        const double p = rng.uniform01();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (rng.bernoulli(p)) m.set(x, y);
    } else if (style == 1) {
        return m;
    } else {
        const int rects = static_cast<int>(rng.between(1, 5));
        for (int i = 0; i < rects; ++i) {
            const int rx = static_cast<int>(rng.between(0, w - 1));
            const int ry = static_cast<int>(rng.between(0, h - 1));
            m.fill_rect({rx, ry, static_cast<int>(rng.between(1, w - rx)), static_cast<int>(rng.between(1, h - ry))});
        }
        if (style == 3) {
            for (int i = 0; i < w * h / 16; ++i)
                m.set(static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h)), rng.bernoulli(0.5));
        }
    }
    return m;
}

/// Synthesizer output directory shared by the tests of one process.
inline const std::filesystem::path& shared_scene_set(int count = 30, std::uint64_t seed = 42) {
    static TempDir dir("arsent-scenes");
    static const bool made = [&] {
        arsent::SynthSpec spec;
        spec.seed = seed;
        spec.count = count;
        arsent::synthesize(spec, dir.path(), 2);
        return true;
    }();
    (void)made;
    return dir.path();
}

inline arsent::PipelineConfig oracle_config(const std::filesystem::path& dir, const std::string& params = "") {
    arsent::PipelineConfig c;
    c.set_locator("oracle:" + dir.string() + params);
    return c;
}

}  // namespace testing
