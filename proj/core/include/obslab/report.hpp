#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace obslab {

const char* tool_version();

// Stable hash of a canonical config rendering; embedded in every output file
// so runs can be matched to their exact configuration.
std::uint64_t config_hash(const std::string& canonical_config);

struct SweepRow {
    std::string prompt_id;
    std::string model_type;
    std::size_t tau = 0;  // prefix length the Q/R values belong to
    std::size_t q = 0;
    std::size_t r = 0;
    std::size_t domain_size = 0;
    bool bijective = false;
    double terminated_fraction = 0.0;
};

// Fixed, versioned column set. metadata lines are written first as '#'
// comments (version, config hash, seeds, tolerance) so the CSV is
// self-describing; data rows follow a single header row. LF line endings.
void write_sweep_csv(const std::string& path, const std::vector<std::string>& metadata,
                     const std::vector<SweepRow>& rows);

std::string format_sweep_csv(const std::vector<std::string>& metadata,
                             const std::vector<SweepRow>& rows);

}  // namespace obslab
