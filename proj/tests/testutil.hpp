#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rankbed/errors.hpp"
#include "rankbed/scorer.hpp"

namespace testutil {

class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("rankbed_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Fixed-response scorer for format/gate fixtures.
class ScriptedScorer final : public rankbed::Scorer {
public:
    std::function<rankbed::AnswerLogits(const rankbed::PromptRequest&)> on_score;
    std::function<rankbed::GenerationResult(const rankbed::PromptRequest&)> on_generate;

    rankbed::AnswerLogits score_answer(const rankbed::PromptRequest& r) override {
        if (!on_score) throw rankbed::ValidationError("no score script");
        return on_score(r);
    }
    rankbed::GenerationResult generate(const rankbed::PromptRequest& r) override {
        if (!on_generate) throw rankbed::ValidationError("no generate script");
        return on_generate(r);
    }
};

// Always fails with a transport error (exhausted retries).
class FailingScorer final : public rankbed::Scorer {
public:
    rankbed::AnswerLogits score_answer(const rankbed::PromptRequest&) override {
        throw rankbed::TransportError("scripted transport failure", 3);
    }
    rankbed::GenerationResult generate(const rankbed::PromptRequest&) override {
        throw rankbed::TransportError("scripted transport failure", 3);
    }
};

// mt19937_64 is stable across platforms by the standard, fine for tests.
struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine);
    }
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(engine);
    }
};

}  // namespace testutil
