#include "obslab/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "f32io.hpp"
#include "obslab/error.hpp"
#include "obslab/hash.hpp"

namespace obslab {

using detail::read_f32_le;
using detail::write_f32_le;

namespace {

constexpr char kMagic[] = "OBSLM1\n";
constexpr std::size_t kMagicLen = 7;

}  // namespace

void save_checkpoint(const TinyLm& model, const std::string& path) {
    std::ostringstream header;
    const LmConfig& c = model.config();
    header << "format_version=1\n"
           << "embed_dim=" << c.embed_dim << "\n"
           << "context=" << c.context << "\n"
           << "layers=" << c.layers << "\n"
           << "heads=" << c.heads << "\n"
           << "ff_dim=" << c.ff_dim << "\n"
           << "vocab=" << c.vocab << "\n"
           << "ln_eps=" << c.ln_eps << "\n"
           << "checksum=" << hex64(model.checksum()) << "\n"
           << "tensors=" << model.param_names().size() << "\n";
    std::size_t offset = 0;  // byte position within the weight block
    for (const std::string& name : model.param_names()) {
        header << name;
        for (std::size_t d : model.param(name).shape) header << " " << d;
        header << " @ " << offset << "\n";
        offset += model.param(name).numel() * 4;
    }
    const std::string head = header.str();

    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorCode::io, "checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, kMagicLen);
    os << head.size() << "\n";
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const std::string& name : model.param_names()) write_f32_le(os, model.param(name).values);
    if (!os) raise(ErrorCode::io, "checkpoint: write failed for " + path);
}

TinyLm load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorCode::io, "checkpoint: cannot open " + path);

    char magic[kMagicLen];
    is.read(magic, kMagicLen);
    if (is.gcount() != static_cast<std::streamsize>(kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
        raise(ErrorCode::checkpoint_format, "checkpoint: bad magic in " + path);

    std::string len_line;
    if (!std::getline(is, len_line)) raise(ErrorCode::checkpoint_format, "checkpoint: missing header length");
    std::size_t head_len = 0;
    try {
        head_len = static_cast<std::size_t>(std::stoull(len_line));
    } catch (const std::exception&) {
        raise(ErrorCode::checkpoint_format, "checkpoint: bad header length line");
    }
    std::string head(head_len, '\0');
    is.read(head.data(), static_cast<std::streamsize>(head_len));
    if (is.gcount() != static_cast<std::streamsize>(head_len))
        raise(ErrorCode::checkpoint_format, "checkpoint: truncated header");

    struct ManifestEntry {
        std::string name;
        std::vector<std::size_t> shape;
        std::size_t offset;
    };
    std::map<std::string, std::string> kv;
    std::vector<ManifestEntry> manifest;
    std::istringstream hs(head);
    std::string line;
    std::size_t expected_tensors = 0;
    bool in_manifest = false;
    while (std::getline(hs, line)) {
        if (!in_manifest) {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                raise(ErrorCode::checkpoint_format, "checkpoint: malformed header line '" + line + "'");
            kv[line.substr(0, eq)] = line.substr(eq + 1);
            if (line.substr(0, eq) == "tensors") {
                expected_tensors = std::stoull(line.substr(eq + 1));
                in_manifest = true;
            }
        } else {
            std::istringstream ls(line);
            ManifestEntry e{};
            ls >> e.name;
            std::vector<std::string> fields;
            std::string f;
            while (ls >> f) fields.push_back(f);
            if (e.name.empty() || fields.size() < 3 || fields[fields.size() - 2] != "@")
                raise(ErrorCode::checkpoint_format, "checkpoint: malformed manifest line '" + line + "'");
            for (std::size_t i = 0; i + 2 < fields.size(); ++i) e.shape.push_back(std::stoull(fields[i]));
            e.offset = std::stoull(fields.back());
            if (e.shape.empty())
                raise(ErrorCode::checkpoint_format, "checkpoint: malformed manifest line '" + line + "'");
            manifest.push_back(std::move(e));
        }
    }
    for (const char* key : {"format_version", "embed_dim", "context", "layers", "heads", "ff_dim", "vocab"})
        if (!kv.count(key)) raise(ErrorCode::checkpoint_format, std::string("checkpoint: missing header key ") + key);
    if (kv.at("format_version") != "1")
        raise(ErrorCode::checkpoint_format, "checkpoint: unsupported format_version " + kv.at("format_version"));
    if (manifest.size() != expected_tensors)
        raise(ErrorCode::checkpoint_format, "checkpoint: manifest count mismatch");

    LmConfig cfg;
    cfg.embed_dim = std::stoull(kv.at("embed_dim"));
    cfg.context = std::stoull(kv.at("context"));
    cfg.layers = std::stoull(kv.at("layers"));
    cfg.heads = std::stoull(kv.at("heads"));
    cfg.ff_dim = std::stoull(kv.at("ff_dim"));
    cfg.vocab = std::stoull(kv.at("vocab"));
    if (kv.count("ln_eps")) cfg.ln_eps = std::stod(kv.at("ln_eps"));
    TinyLm model(cfg);

    if (manifest.size() != model.param_names().size())
        raise(ErrorCode::checkpoint_format, "checkpoint: tensor count does not match config");
    std::size_t expected_offset = 0;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const ManifestEntry& e = manifest[i];
        if (e.name != model.param_names()[i])
            raise(ErrorCode::checkpoint_format, "checkpoint: unexpected tensor '" + e.name + "'");
        Tensor& dst = model.param(e.name);
        if (e.shape != dst.shape)
            raise(ErrorCode::checkpoint_format, "checkpoint: shape mismatch for '" + e.name + "'");
        if (e.offset != expected_offset)
            raise(ErrorCode::checkpoint_format, "checkpoint: offset mismatch for '" + e.name + "'");
        expected_offset += dst.numel() * 4;
        read_f32_le(is, dst.values);
    }
    return model;
}

}  // namespace obslab
