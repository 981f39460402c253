#pragma once

// Deterministic artifact output: every file lands atomically (written to a
// temporary name, then renamed), and a manifest.csv records the byte count
// and CRC-32 checksum of each artifact so a consumer can verify integrity.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bilat::artifacts {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320) of a byte string.
std::uint32_t crc32(std::string_view bytes);

// A directory that collects the artifacts of one run.  Files are written
// atomically and logged; finalize() emits manifest.csv with one row per
// artifact: file,bytes,crc32 (checksum as 8 hex digits).  Artifact names
// must be flat (no path separators) and must not collide with the manifest.
class RunDirectory {
  public:
    explicit RunDirectory(std::filesystem::path dir);

    // Writes bytes to <dir>/<name> via a temporary file and a rename.
    void write(const std::string& name, std::string_view bytes);

    // Writes manifest.csv (rows sorted by file name).  Idempotent per run;
    // further write() calls after finalize() are rejected.
    void finalize();

    const std::filesystem::path& path() const { return dir_; }

  private:
    struct Entry {
        std::string name;
        std::uint64_t bytes;
        std::uint32_t crc;
    };

    void write_raw(const std::string& name, std::string_view bytes) const;

    std::filesystem::path dir_;
    std::vector<Entry> entries_;
    bool finalized_ = false;
};

} // namespace bilat::artifacts
