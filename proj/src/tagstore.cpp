#include "qfc/tagstore.hpp"

#include <cstdio>
#include <cstring>

namespace qfc {

namespace {

constexpr std::size_t kBufferRecords = 4096;

void put_u64_le(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

struct TagWriter::Impl {
    std::FILE* f = nullptr;
    std::vector<unsigned char> buf;
};

TagWriter::TagWriter(const std::string& path, const TagFileHeader& header) : impl_(new Impl) {
    impl_->f = std::fopen(path.c_str(), "wb");
    if (!impl_->f) {
        delete impl_;
        throw FormatError("tagstore: cannot open for writing: " + path);
    }
    unsigned char hdr[TagFileHeader::kHeaderSize] = {0};
    std::memcpy(hdr, TagFileHeader::kMagic, 8);
    put_u64_le(hdr + 8, header.resolution_ps);
    hdr[16] = header.channel_count;
    std::fwrite(hdr, 1, sizeof hdr, impl_->f);
    impl_->buf.reserve(kBufferRecords * TagFileHeader::kRecordSize);
}

TagWriter::~TagWriter() {
    try {
        close();
    } catch (...) {
    }
    delete impl_;
}

void TagWriter::write(const TimeTag& tag) {
    if (!impl_->f) throw FormatError("tagstore: writer already closed");
    if (have_last_ && tag.timestamp_ps < last_timestamp_) {
        throw ValidationError("tagstore: tag out of order at index " + std::to_string(count_) +
                              " (timestamp " + std::to_string(tag.timestamp_ps) + " < " +
                              std::to_string(last_timestamp_) + ")");
    }
    last_timestamp_ = tag.timestamp_ps;
    have_last_ = true;
    unsigned char rec[TagFileHeader::kRecordSize] = {0};
    put_u64_le(rec, tag.timestamp_ps);
    rec[8] = tag.channel;
    rec[9] = tag.flags;
    impl_->buf.insert(impl_->buf.end(), rec, rec + sizeof rec);
    if (impl_->buf.size() >= kBufferRecords * TagFileHeader::kRecordSize) flush_buffer();
    ++count_;
}

void TagWriter::write(const std::vector<TimeTag>& tags) {
    for (const auto& t : tags) write(t);
}

void TagWriter::flush_buffer() {
    if (!impl_->buf.empty()) {
        std::fwrite(impl_->buf.data(), 1, impl_->buf.size(), impl_->f);
        impl_->buf.clear();
    }
}

void TagWriter::close() {
    if (impl_->f) {
        flush_buffer();
        if (std::fclose(impl_->f) != 0) {
            impl_->f = nullptr;
            throw FormatError("tagstore: close failed");
        }
        impl_->f = nullptr;
    }
}

struct TagReader::Impl {
    std::FILE* f = nullptr;
    std::vector<unsigned char> buf;
    std::size_t pos = 0;   // next unread byte in buf
    std::uint64_t byte_offset = 0;  // file offset of buf[0]
};

TagReader::TagReader(const std::string& path, Options options) : impl_(new Impl), options_(options) {
    impl_->f = std::fopen(path.c_str(), "rb");
    if (!impl_->f) {
        delete impl_;
        throw FormatError("tagstore: cannot open for reading: " + path);
    }
    unsigned char hdr[TagFileHeader::kHeaderSize];
    const std::size_t got = std::fread(hdr, 1, sizeof hdr, impl_->f);
    if (got != sizeof hdr || std::memcmp(hdr, TagFileHeader::kMagic, 8) != 0) {
        std::fclose(impl_->f);
        delete impl_;
        throw FormatError("tagstore: bad magic in " + path);
    }
    header_.resolution_ps = get_u64_le(hdr + 8);
    header_.channel_count = hdr[16];
    impl_->byte_offset = TagFileHeader::kHeaderSize;
    const std::size_t n = std::max<std::size_t>(header_.channel_count, 2);
    last_per_channel_.assign(256, 0);
    seen_per_channel_.assign(256, false);
    (void)n;
}

TagReader::~TagReader() {
    if (impl_->f) std::fclose(impl_->f);
    delete impl_;
}

bool TagReader::next(TimeTag& out) {
    for (;;) {
        if (impl_->pos + TagFileHeader::kRecordSize > impl_->buf.size()) {
            // refill
            const std::size_t leftover = impl_->buf.size() - impl_->pos;
            if (leftover > 0)
                std::memmove(impl_->buf.data(), impl_->buf.data() + impl_->pos, leftover);
            impl_->byte_offset += impl_->pos;
            impl_->buf.resize(leftover);
            impl_->pos = 0;
            unsigned char chunk[kBufferRecords * TagFileHeader::kRecordSize];
            const std::size_t got = std::fread(chunk, 1, sizeof chunk, impl_->f);
            impl_->buf.insert(impl_->buf.end(), chunk, chunk + got);
            if (impl_->buf.size() < TagFileHeader::kRecordSize) {
                if (!impl_->buf.empty()) {
                    throw FormatError("tagstore: truncated record at byte offset " +
                                      std::to_string(impl_->byte_offset));
                }
                return false;
            }
        }
        const unsigned char* rec = impl_->buf.data() + impl_->pos;
        impl_->pos += TagFileHeader::kRecordSize;
        TimeTag tag;
        tag.timestamp_ps = get_u64_le(rec);
        tag.channel = rec[8];
        tag.flags = rec[9];
        if (options_.validate_monotonic) {
            if (seen_per_channel_[tag.channel] && tag.timestamp_ps < last_per_channel_[tag.channel]) {
                throw ValidationError("tagstore: non-monotonic timestamps on channel " +
                                      std::to_string(tag.channel));
            }
            seen_per_channel_[tag.channel] = true;
            last_per_channel_[tag.channel] = tag.timestamp_ps;
        }
        if (options_.channel && tag.channel != *options_.channel) continue;
        out = tag;
        return true;
    }
}

std::vector<TimeTag> TagReader::read_all() {
    std::vector<TimeTag> tags;
    TimeTag t;
    while (next(t)) tags.push_back(t);
    return tags;
}

void write_tag_file(const std::string& path, const TagFileHeader& header,
                    const std::vector<TimeTag>& tags) {
    TagWriter w(path, header);
    w.write(tags);
    w.close();
}

std::vector<TimeTag> read_tag_file(const std::string& path, std::optional<std::uint8_t> channel) {
    TagReader::Options opt;
    opt.channel = channel;
    TagReader r(path, opt);
    return r.read_all();
}

}  // namespace qfc
