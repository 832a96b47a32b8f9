#include "obslab/report.hpp"

#include <cstdio>
#include <fstream>

#include "obslab/error.hpp"
#include "obslab/hash.hpp"

namespace obslab {

const char* tool_version() { return "0.1.0"; }

std::uint64_t config_hash(const std::string& canonical_config) {
    return hash_bytes(canonical_config);
}

std::string format_sweep_csv(const std::vector<std::string>& metadata,
                             const std::vector<SweepRow>& rows) {
    std::string out;
    for (const std::string& line : metadata) {
        out += "# ";
        out += line;
        out += "\n";
    }
    out += "prompt_id,model_type,tau,Q,R,domain_size,bijective,terminated_fraction\n";
    char buf[64];
    for (const SweepRow& r : rows) {
        out += r.prompt_id;
        out += ",";
        out += r.model_type;
        std::snprintf(buf, sizeof(buf), ",%zu,%zu,%zu,%zu,%d,", r.tau, r.q, r.r, r.domain_size,
                      r.bijective ? 1 : 0);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%.6f", r.terminated_fraction);
        out += buf;
        out += "\n";
    }
    return out;
}

void write_sweep_csv(const std::string& path, const std::vector<std::string>& metadata,
                     const std::vector<SweepRow>& rows) {
    std::ofstream os(path, std::ios::binary);  // binary: keep LF on every platform
    if (!os) raise(ErrorCode::io, "csv: cannot open " + path + " for writing");
    const std::string text = format_sweep_csv(metadata, rows);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) raise(ErrorCode::io, "csv: write failed for " + path);
}

}  // namespace obslab
