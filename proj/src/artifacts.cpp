#include "bilat/artifacts.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include "bilat/errors.hpp"

namespace bilat::artifacts {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

} // namespace

std::uint32_t crc32(std::string_view bytes) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    std::uint32_t c = 0xFFFFFFFFu;
    for (const char ch : bytes) c = table[(c ^ std::uint8_t(ch)) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

RunDirectory::RunDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec && !std::filesystem::is_directory(dir_))
        throw ValidationError("artifacts: cannot create output directory '" + dir_.string() +
                              "': " + ec.message());
}

void RunDirectory::write_raw(const std::string& name, std::string_view bytes) const {
    const std::filesystem::path final_path = dir_ / name;
    const std::filesystem::path temp_path = dir_ / (name + ".tmp");
    {
        std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("artifacts: cannot open '" + temp_path.string() + "'");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        if (!out) throw ValidationError("artifacts: short write to '" + temp_path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(temp_path, final_path, ec);
    if (ec)
        throw ValidationError("artifacts: cannot move '" + temp_path.string() + "' into place: " +
                              ec.message());
}

void RunDirectory::write(const std::string& name, std::string_view bytes) {
    if (finalized_) throw ValidationError("artifacts: run already finalized");
    if (name.empty() || name.find('/') != std::string::npos ||
        name.find('\\') != std::string::npos)
        throw ValidationError("artifacts: artifact names must be flat file names");
    if (name == "manifest.csv")
        throw ValidationError("artifacts: 'manifest.csv' is reserved for the manifest");
    for (const Entry& entry : entries_)
        if (entry.name == name)
            throw ValidationError("artifacts: duplicate artifact '" + name + "'");
    write_raw(name, bytes);
    entries_.push_back({name, bytes.size(), crc32(bytes)});
}

void RunDirectory::finalize() {
    if (finalized_) return;
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.name < b.name; });
    std::string manifest = "file,bytes,crc32\n";
    char tail[40];
    for (const Entry& entry : entries_) {
        std::snprintf(tail, sizeof tail, ",%llu,%08x\n",
                      static_cast<unsigned long long>(entry.bytes), entry.crc);
        manifest += entry.name;
        manifest += tail;
    }
    write_raw("manifest.csv", manifest);
    finalized_ = true;
}

} // namespace bilat::artifacts
