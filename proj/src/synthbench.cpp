// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/synthbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "grt/error.hpp"

namespace grt {

using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(rng() % span);
}

struct Background {
    std::vector<int> base;  // per channel
    Frame frame;
};

constexpr int kBaseLo = 50;
constexpr int kBaseHi = 205;
constexpr int kMinBaseGap = 60;
constexpr int kPatchSpread = 10;
constexpr int kTexture = 32;

Background make_background(const SynthSpec& spec, std::uint64_t seed, const std::vector<int>* previous) {
    std::mt19937_64 rng(seed);
    Background bg;
    bg.base.resize(static_cast<std::size_t>(spec.channels));
    for (int attempt = 0;; ++attempt) {
        for (int& b : bg.base) {
            b = uniform_int(rng, kBaseLo, kBaseHi);
        }
        if (previous == nullptr || attempt > 1000) {
            break;
        }
        int gap = 0;
        for (std::size_t c = 0; c < bg.base.size(); ++c) {
            gap = std::max(gap, std::abs(bg.base[c] - (*previous)[c]));
        }
        if (gap >= kMinBaseGap) {
            break;
        }
    }
    const int ps = spec.patch_size;
    const int gw = spec.width / ps;
    const int gh = spec.height / ps;
    std::vector<int> patch_offset(static_cast<std::size_t>(gw * gh * spec.channels));
    for (int& o : patch_offset) {
        o = uniform_int(rng, -kPatchSpread, kPatchSpread);
    }
    bg.frame = Frame(spec.width, spec.height, spec.channels);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const int texture = uniform_int(rng, -kTexture, kTexture);
            const int patch = (y / ps) * gw + (x / ps);
            for (int c = 0; c < spec.channels; ++c) {
                const int v = bg.base[static_cast<std::size_t>(c)] +
                              patch_offset[static_cast<std::size_t>(patch * spec.channels + c)] + texture;
                bg.frame.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
    return bg;
}

std::vector<std::uint32_t> choose_moving(std::size_t n, double fraction, std::uint64_t seed) {
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < std::min(k, n); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(k, n));
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<std::uint32_t> all_patches(std::size_t n) {
    std::vector<std::uint32_t> v(n);
    std::iota(v.begin(), v.end(), 0u);
    return v;
}

std::vector<std::uint32_t> set_union(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string format_double(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) {
        out.push_back(cell);
    }
    return out;
}

}  // namespace

std::size_t SynthSpec::frame_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : segments) {
        n += s.length;
    }
    return n;
}

void SynthSpec::validate() const {
    if (width <= 0 || height <= 0 || patch_size <= 0 || width % patch_size || height % patch_size) {
        throw Error(ErrorCode::InvalidSpec, "dimensions must be positive multiples of patch_size");
    }
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::InvalidSpec, "channels must be 1 or 3");
    }
    if (fps.num <= 0) {
        throw Error(ErrorCode::InvalidSpec, "fps must be positive");
    }
    if (segments.empty()) {
        throw Error(ErrorCode::InvalidSpec, "at least one segment required");
    }
    for (const auto& s : segments) {
        if (s.length == 0) {
            throw Error(ErrorCode::InvalidSpec, "segment length must be positive");
        }
        if (!(s.moving_fraction >= 0.0 && s.moving_fraction <= 1.0)) {
            throw Error(ErrorCode::InvalidSpec, "moving_fraction must lie in [0, 1]");
        }
    }
    if (!(noise_amplitude >= 0.0 && noise_amplitude <= 255.0)) {
        throw Error(ErrorCode::InvalidSpec, "noise_amplitude must lie in [0, 255]");
    }
    if (duration < 0.0 ||
        (duration > 0.0 && std::abs(duration * fps.value() - static_cast<double>(frame_count())) > 0.5)) {
        throw Error(ErrorCode::InvalidSpec, "duration disagrees with the segment lengths");
    }
}

void to_json(json& j, const SynthSpec& spec) {
    json segs = json::array();
    for (const auto& s : spec.segments) {
        segs.push_back({{"length", s.length}, {"moving_fraction", s.moving_fraction}, {"cut_before", s.cut_before}});
    }
    j = json{{"width", spec.width},
             {"height", spec.height},
             {"channels", spec.channels},
             {"patch_size", spec.patch_size},
             {"fps", spec.fps.value()},
             {"duration", spec.duration},
             {"noise_amplitude", spec.noise_amplitude},
             {"seed", spec.seed},
             {"segments", std::move(segs)}};
}

void from_json(const json& j, SynthSpec& spec) {
    try {
        spec.width = j.value("width", spec.width);
        spec.height = j.value("height", spec.height);
        spec.channels = j.value("channels", spec.channels);
        spec.patch_size = j.value("patch_size", spec.patch_size);
        if (j.contains("fps")) {
            spec.fps = Rational::from_double(j.at("fps").get<double>());
        }
        spec.duration = j.value("duration", spec.duration);
        spec.noise_amplitude = j.value("noise_amplitude", spec.noise_amplitude);
        spec.seed = j.value("seed", spec.seed);
        spec.segments.clear();
        for (const auto& s : j.at("segments")) {
            SynthSegment seg;
            seg.length = s.at("length").get<std::size_t>();
            seg.moving_fraction = s.value("moving_fraction", 0.0);
            seg.cut_before = s.value("cut_before", false);
            spec.segments.push_back(seg);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, e.what());
    }
    spec.validate();
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, e.what());
    }
    return j.get<SynthSpec>();
}

std::pair<FrameSequence, OracleAnnotation> generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    const std::size_t n = spec.patch_count();
    const int ps = spec.patch_size;
    const int gw = spec.width / ps;
    const int amp = static_cast<int>(std::lround(spec.noise_amplitude));

    FrameSequence seq;
    seq.native_fps = spec.fps;
    seq.width = spec.width;
    seq.height = spec.height;
    seq.channels = spec.channels;
    seq.frames.reserve(spec.frame_count());

    OracleAnnotation ann;
    ann.patch_count = n;

    std::optional<Background> bg;
    std::vector<std::uint32_t> prev_moving;
    std::size_t frame_no = 0;
    const double period = 1.0 / spec.fps.value();
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
        const SynthSegment& seg = spec.segments[s];
        const bool fresh = !bg || seg.cut_before;
        if (fresh) {
            bg = make_background(spec, mix_seed(spec.seed, 2 * s), bg ? &bg->base : nullptr);
        }
        const auto moving = choose_moving(n, seg.moving_fraction, mix_seed(spec.seed, 2 * s + 1));
        ann.segments.push_back({frame_no, frame_no + seg.length, seg.cut_before});

        for (std::size_t t = 0; t < seg.length; ++t, ++frame_no) {
            Frame f = bg->frame;
            f.timestamp = static_cast<double>(frame_no) * period;
            std::mt19937_64 rng(mix_seed(spec.seed ^ 0xF00D, frame_no));
            for (std::uint32_t p : moving) {
                const int x0 = static_cast<int>(p % static_cast<std::uint32_t>(gw)) * ps;
                const int y0 = static_cast<int>(p / static_cast<std::uint32_t>(gw)) * ps;
                for (int y = y0; y < y0 + ps; ++y) {
                    for (int x = x0; x < x0 + ps; ++x) {
                        const int noise = amp > 0 ? uniform_int(rng, -amp, amp) : 0;
                        for (int c = 0; c < spec.channels; ++c) {
                            f.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(int{f.at(x, y, c)} + noise, 0, 255));
                        }
                    }
                }
            }
            seq.frames.push_back(std::move(f));
            ann.perturbed.push_back(moving);
            if (frame_no == 0 || (t == 0 && fresh)) {
                ann.changed.push_back(all_patches(n));
            } else if (t == 0) {
                ann.changed.push_back(set_union(prev_moving, moving));
            } else {
                ann.changed.push_back(moving);
            }
        }
        prev_moving = moving;
    }
    return {std::move(seq), std::move(ann)};
}

std::vector<std::uint32_t> changed_between(const OracleAnnotation& ann, std::size_t i, std::size_t j) {
    if (!(i < j) || j >= ann.perturbed.size()) {
        throw Error(ErrorCode::OffsetOutOfRange, "changed_between needs i < j < frame count");
    }
    for (const SegmentSpan& seg : ann.segments) {
        if (seg.cut_before && seg.start > i && seg.start <= j) {
            return all_patches(ann.patch_count);
        }
    }
    return set_union(ann.perturbed[i], ann.perturbed[j]);
}

json annotation_json(const OracleAnnotation& ann) {
    json segs = json::array();
    for (const auto& s : ann.segments) {
        segs.push_back({{"start", s.start}, {"end", s.end}, {"cut_before", s.cut_before}});
    }
    return {{"patch_count", ann.patch_count},
            {"perturbed", ann.perturbed},
            {"changed", ann.changed},
            {"segments", std::move(segs)}};
}

namespace {

void sort_and_check_rates(std::vector<Rational>& fps_list, const FrameSequence& seq) {
    if (fps_list.empty()) {
        throw Error(ErrorCode::InvalidConfig, "fps list is empty");
    }
    std::sort(fps_list.begin(), fps_list.end());
    fps_list.erase(std::unique(fps_list.begin(), fps_list.end()), fps_list.end());
    if (seq.native_fps < fps_list.back()) {
        throw Error(ErrorCode::UpsampleRequested,
                    "sweep rate " + to_string(fps_list.back()) + " exceeds native " + to_string(seq.native_fps));
    }
}

}  // namespace

RetentionReport run_retention_sweep(const FrameSequence& seq, std::vector<Rational> fps_list,
                                    const PipelineConfig& cfg) {
    sort_and_check_rates(fps_list, seq);
    const TokenizerWeights w = make_weights(cfg, seq);
    RetentionReport report;
    for (const Rational& fps : fps_list) {
        const FrameSequence sampled = resample_fps(seq, fps);
        const PipelineResult r = run_pipeline(sampled, cfg, w);
        RetentionRow row;
        row.fps = fps.value();
        row.baseline_tokens = r.counts.baseline;
        row.after_pruning = r.counts.after_pruning;
        row.after_merging = r.counts.after_merging;
        row.pruning_ratio = r.counts.pruning_ratio();
        row.merging_ratio = r.counts.merging_ratio();
        report.rows.push_back(row);
    }
    return report;
}

TimingReport run_timing_sweep(const FrameSequence& seq, std::vector<Rational> fps_list, int reps,
                              const PipelineConfig& cfg) {
    if (reps < 3) {
        throw Error(ErrorCode::InvalidConfig, "timing needs at least 3 repetitions");
    }
    sort_and_check_rates(fps_list, seq);
    const TokenizerWeights w = make_weights(cfg, seq);
    const int ps = cfg.scene.patch_size;
    using clock = std::chrono::steady_clock;

    TimingReport report;
    report.repetitions = reps;
    {
        std::ostringstream env;
        env << "compiler=" <<
#if defined(__clang__)
            "clang " << __clang_version__
#elif defined(__GNUC__)
            "gcc " << __VERSION__
#else
            "unknown"
#endif
            << "; hardware_threads=" << std::thread::hardware_concurrency()
            << "; timing=single-thread steady_clock median of " << reps << " reps after 1 warm-up";
        report.environment = env.str();
    }

    for (const Rational& fps : fps_list) {
        const FrameSequence sampled = resample_fps(seq, fps);

        auto full_run = [&] {
            std::vector<std::vector<float>> out;
            out.reserve(sampled.size());
            for (const Frame& f : sampled.frames) {
                out.push_back(tokenize_full_frame(extract_patches(f, ps), w));
            }
            return out;
        };
        auto gated_run = [&] {
            PipelineConfig gated = cfg;
            gated.threads = 1;
            gated.all_pass = false;
            const auto scenes = segment_scenes(sampled, gated.scene);
            return tokenize_scenes(scenes, sampled, gated, w);
        };

        std::vector<double> full_t, gated_t;
        std::vector<std::vector<float>> full_ref;
        std::vector<SceneTokens> gated_ref;
        for (int rep = 0; rep <= reps; ++rep) {
            auto t0 = clock::now();
            auto full_out = full_run();
            auto t1 = clock::now();
            auto gated_out = gated_run();
            auto t2 = clock::now();
            if (rep == 0) {
                full_ref = std::move(full_out);
                gated_ref = std::move(gated_out);
                continue;
            }
            if (full_out != full_ref || gated_out != gated_ref) {
                throw Error(ErrorCode::NondeterministicOutput,
                            "token outputs differ across repetitions at " + to_string(fps) + " fps");
            }
            full_t.push_back(std::chrono::duration<double>(t1 - t0).count());
            gated_t.push_back(std::chrono::duration<double>(t2 - t1).count());
        }

        TimingRow row;
        row.fps = fps.value();
        row.frames = sampled.size();
        row.full_tokenize_seconds = std::max(median(full_t), 1e-12);
        row.gated_tokenize_seconds = std::max(median(gated_t), 1e-12);
        row.speedup_percent =
            (row.full_tokenize_seconds - row.gated_tokenize_seconds) / row.full_tokenize_seconds * 100.0;
        row.full_tokens = sampled.size() * static_cast<std::size_t>(w.num_patches);
        for (const SceneTokens& st : gated_ref) {
            const auto [k, p] = count_tokens(st);
            row.gated_tokens += k + p;
        }
        report.rows.push_back(row);
    }
    return report;
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "md" || s == "markdown") return ReportFormat::Markdown;
    throw Error(ErrorCode::InvalidConfig, "unknown report format '" + s + "'");
}

std::string render(const RetentionReport& r, ReportFormat f) {
    std::ostringstream os;
    switch (f) {
        case ReportFormat::Json: {
            json rows = json::array();
            for (const auto& row : r.rows) {
                rows.push_back({{"fps", row.fps},
                                {"baseline_tokens", row.baseline_tokens},
                                {"after_pruning", row.after_pruning},
                                {"after_merging", row.after_merging},
                                {"pruning_ratio", row.pruning_ratio},
                                {"merging_ratio", row.merging_ratio}});
            }
            os << json{{"kind", "retention"}, {"rows", std::move(rows)}}.dump(2) << '\n';
            break;
        }
        case ReportFormat::Csv:
            os << kRetentionCsvHeader << '\n';
            for (const auto& row : r.rows) {
                os << format_double(row.fps) << ',' << row.baseline_tokens << ',' << row.after_pruning << ','
                   << row.after_merging << ',' << format_double(row.pruning_ratio) << ','
                   << format_double(row.merging_ratio) << '\n';
            }
            break;
        case ReportFormat::Markdown:
            os << "| FPS | Baseline | Gated Pruning | Scene Merging | Pruning Ratio | Merging Ratio |\n"
               << "|---|---|---|---|---|---|\n";
            for (const auto& row : r.rows) {
                os << "| " << row.fps << " | " << row.baseline_tokens << " | " << row.after_pruning << " | "
                   << row.after_merging << " | " << std::fixed << std::setprecision(2) << row.pruning_ratio
                   << " | " << row.merging_ratio << " |\n"
                   << std::defaultfloat;
            }
            break;
    }
    return os.str();
}

std::string render(const TimingReport& r, ReportFormat f) {
    std::ostringstream os;
    switch (f) {
        case ReportFormat::Json: {
            json rows = json::array();
            for (const auto& row : r.rows) {
                rows.push_back({{"fps", row.fps},
                                {"frames", row.frames},
                                {"full_tokenize_seconds", row.full_tokenize_seconds},
                                {"gated_tokenize_seconds", row.gated_tokenize_seconds},
                                {"speedup_percent", row.speedup_percent},
                                {"full_tokens", row.full_tokens},
                                {"gated_tokens", row.gated_tokens}});
            }
            os << json{{"kind", "timing"},
                       {"repetitions", r.repetitions},
                       {"environment", r.environment},
                       {"rows", std::move(rows)}}
                      .dump(2)
               << '\n';
            break;
        }
        case ReportFormat::Csv:
            os << "# repetitions=" << r.repetitions << "; " << r.environment << '\n' << kTimingCsvHeader << '\n';
            for (const auto& row : r.rows) {
                os << format_double(row.fps) << ',' << row.frames << ',' << format_double(row.full_tokenize_seconds)
                   << ',' << format_double(row.gated_tokenize_seconds) << ',' << format_double(row.speedup_percent)
                   << ',' << row.full_tokens << ',' << row.gated_tokens << '\n';
            }
            break;
        case ReportFormat::Markdown:
            os << "| FPS | Frames | Full (s) | Gated (s) | Speedup |\n|---|---|---|---|---|\n";
            for (const auto& row : r.rows) {
                os << "| " << row.fps << " | " << row.frames << " | " << std::setprecision(4)
                   << row.full_tokenize_seconds << " | " << row.gated_tokenize_seconds << " | " << std::fixed
                   << std::setprecision(1) << row.speedup_percent << "% |\n"
                   << std::defaultfloat;
            }
            os << "\n" << r.repetitions << " repetitions; " << r.environment << '\n';
            break;
    }
    return os.str();
}

RetentionReport parse_retention(const std::string& text, ReportFormat f) {
    RetentionReport r;
    try {
        if (f == ReportFormat::Json) {
            const json j = json::parse(text);
            for (const auto& row : j.at("rows")) {
                r.rows.push_back({row.at("fps").get<double>(), row.at("baseline_tokens").get<std::size_t>(),
                                  row.at("after_pruning").get<std::size_t>(),
                                  row.at("after_merging").get<std::size_t>(), row.at("pruning_ratio").get<double>(),
                                  row.at("merging_ratio").get<double>()});
            }
            return r;
        }
        if (f == ReportFormat::Csv) {
            std::istringstream is(text);
            std::string line;
            if (!std::getline(is, line) || line != kRetentionCsvHeader) {
                throw Error(ErrorCode::IoError, "unexpected retention CSV header");
            }
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                const auto c = split(line, ',');
                if (c.size() != 6) {
                    throw Error(ErrorCode::IoError, "retention CSV row needs 6 cells");
                }
                r.rows.push_back({std::stod(c[0]), std::stoull(c[1]), std::stoull(c[2]), std::stoull(c[3]),
                                  std::stod(c[4]), std::stod(c[5])});
            }
            return r;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, e.what());
    } catch (const std::logic_error& e) {
        throw Error(ErrorCode::IoError, e.what());
    }
    throw Error(ErrorCode::InvalidConfig, "markdown reports are not parseable");
}

TimingReport parse_timing(const std::string& text, ReportFormat f) {
    TimingReport r;
    try {
        if (f == ReportFormat::Json) {
            const json j = json::parse(text);
            r.repetitions = j.at("repetitions").get<int>();
            r.environment = j.at("environment").get<std::string>();
            for (const auto& row : j.at("rows")) {
                r.rows.push_back({row.at("fps").get<double>(), row.at("frames").get<std::size_t>(),
                                  row.at("full_tokenize_seconds").get<double>(),
                                  row.at("gated_tokenize_seconds").get<double>(),
                                  row.at("speedup_percent").get<double>(), row.at("full_tokens").get<std::size_t>(),
                                  row.at("gated_tokens").get<std::size_t>()});
            }
            return r;
        }
        if (f == ReportFormat::Csv) {
            std::istringstream is(text);
            std::string line;
            if (!std::getline(is, line) || line.rfind("# repetitions=", 0) != 0) {
                throw Error(ErrorCode::IoError, "missing timing CSV preamble");
            }
            const auto semi = line.find("; ");
            r.repetitions = std::stoi(line.substr(14, semi - 14));
            r.environment = semi == std::string::npos ? "" : line.substr(semi + 2);
            if (!std::getline(is, line) || line != kTimingCsvHeader) {
                throw Error(ErrorCode::IoError, "unexpected timing CSV header");
            }
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                const auto c = split(line, ',');
                if (c.size() != 7) {
                    throw Error(ErrorCode::IoError, "timing CSV row needs 7 cells");
                }
                r.rows.push_back({std::stod(c[0]), std::stoull(c[1]), std::stod(c[2]), std::stod(c[3]),
                                  std::stod(c[4]), std::stoull(c[5]), std::stoull(c[6])});
            }
            return r;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, e.what());
    } catch (const std::logic_error& e) {
        throw Error(ErrorCode::IoError, e.what());
    }
    throw Error(ErrorCode::InvalidConfig, "markdown reports are not parseable");
}

namespace {

template <typename Report>
void write_text(const Report& r, ReportFormat f, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << render(r, f);
    if (!out) {
        throw Error(ErrorCode::IoError, "failed writing " + path.string());
    }
}

}  // namespace

void emit_report(const RetentionReport& r, ReportFormat f, const std::filesystem::path& path) {
    write_text(r, f, path);
}

void emit_report(const TimingReport& r, ReportFormat f, const std::filesystem::path& path) {
    write_text(r, f, path);
}

}  // namespace grt
