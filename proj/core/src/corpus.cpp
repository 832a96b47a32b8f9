#include "obslab/corpus.hpp"

#include <array>

#include "obslab/error.hpp"
#include "obslab/rng.hpp"

namespace obslab {

namespace {

constexpr std::array<const char*, 16> kNouns = {
    "system", "state",  "window", "token",  "signal", "prompt", "model", "loop",
    "trace",  "reader", "probe",  "output", "filter", "agent",  "tape",  "clock"};
constexpr std::array<const char*, 12> kVerbs = {
    "drives", "reads",  "shifts", "emits",  "tracks", "hides",
    "maps",   "probes", "holds",  "drops",  "feeds",  "marks"};
constexpr std::array<const char*, 10> kAdjectives = {
    "hidden", "latent", "verbal", "stable", "linear",
    "closed", "plain",  "silent", "inner",  "outer"};
constexpr std::array<const char*, 6> kAdverbs = {
    "slowly", "twice", "again", "often", "never", "once"};

}  // namespace

std::string synthetic_corpus(std::size_t min_bytes, std::uint64_t seed) {
    if (min_bytes == 0) raise(ErrorCode::invalid_parameter, "corpus: min_bytes must be positive");
    Rng rng(seed);
    std::string out;
    out.reserve(min_bytes + 64);
    while (out.size() < min_bytes) {
        const char* adj = kAdjectives[rng.below(kAdjectives.size())];
        const char* noun = kNouns[rng.below(kNouns.size())];
        const char* verb = kVerbs[rng.below(kVerbs.size())];
        const char* obj = kNouns[rng.below(kNouns.size())];
        const std::uint64_t form = rng.below(4);
        out += "the ";
        out += adj;
        out += " ";
        out += noun;
        out += " ";
        out += verb;
        if (form == 0) {
            out += " the ";
            out += obj;
        } else if (form == 1) {
            out += " ";
            out += kAdverbs[rng.below(kAdverbs.size())];
        } else if (form == 2) {
            out += " the ";
            out += kAdjectives[rng.below(kAdjectives.size())];
            out += " ";
            out += obj;
        }
        out += rng.below(5) == 0 ? ".\n" : ". ";
    }
    return out;
}

std::string periodic_corpus(std::size_t min_bytes, std::string_view motif) {
    if (min_bytes == 0) raise(ErrorCode::invalid_parameter, "corpus: min_bytes must be positive");
    if (motif.empty()) raise(ErrorCode::invalid_parameter, "corpus: motif must be non-empty");
    std::string out;
    out.reserve(min_bytes + motif.size());
    while (out.size() < min_bytes) out += motif;
    return out;
}

}  // namespace obslab
