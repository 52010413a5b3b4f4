#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc {

// One detector click. Timestamps are integer picoseconds; no floats appear
// in the file format so multi-second acquisitions accumulate no error.
struct TimeTag {
    std::uint64_t timestamp_ps = 0;
    std::uint8_t channel = 0;
    std::uint8_t flags = 0;  // bit 0: simulated dark count (informational)

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

inline constexpr std::uint8_t kTagFlagDark = 0x01;

// 64-byte file header, fixed layout, little endian.
struct TagFileHeader {
    static constexpr char kMagic[8] = {'Q', 'F', 'C', 'T', 'A', 'G', '\0', '\1'};
    static constexpr std::size_t kHeaderSize = 64;
    static constexpr std::size_t kRecordSize = 16;

    std::uint64_t resolution_ps = 1;
    std::uint8_t channel_count = 2;
};

// Streaming writer: fixed 16-byte records (8 timestamp + 1 channel +
// 1 flags + 6 zero padding) after the header. Tags must arrive globally
// sorted by timestamp (merged channels).
class TagWriter {
public:
    TagWriter(const std::string& path, const TagFileHeader& header);
    ~TagWriter();
    TagWriter(const TagWriter&) = delete;
    TagWriter& operator=(const TagWriter&) = delete;

    void write(const TimeTag& tag);
    void write(const std::vector<TimeTag>& tags);
    std::uint64_t count() const { return count_; }
    void close();

private:
    void flush_buffer();

    struct Impl;
    Impl* impl_;
    std::uint64_t count_ = 0;
    std::uint64_t last_timestamp_ = 0;
    bool have_last_ = false;
};

// Streaming reader with optional channel filter and optional per-channel
// monotonicity validation.
struct TagReaderOptions {
    std::optional<std::uint8_t> channel;  // yield only this channel
    bool validate_monotonic = false;
};

class TagReader {
public:
    using Options = TagReaderOptions;

    explicit TagReader(const std::string& path, Options options = Options());
    ~TagReader();
    TagReader(const TagReader&) = delete;
    TagReader& operator=(const TagReader&) = delete;

    const TagFileHeader& header() const { return header_; }

    // Returns false at end of stream.
    bool next(TimeTag& out);

    // Drains the remainder of the stream.
    std::vector<TimeTag> read_all();

private:
    struct Impl;
    Impl* impl_;
    TagFileHeader header_;
    Options options_;
    std::vector<std::uint64_t> last_per_channel_;
    std::vector<bool> seen_per_channel_;
};

// Convenience wrappers for whole-file access.
void write_tag_file(const std::string& path, const TagFileHeader& header,
                    const std::vector<TimeTag>& tags);
std::vector<TimeTag> read_tag_file(const std::string& path,
                                   std::optional<std::uint8_t> channel = std::nullopt);

}  // namespace qfc
