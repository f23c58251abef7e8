#pragma once

#include <contentforge/byte_io.hpp>
#include <contentforge/error.hpp>

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <span>
#include <string>
#include <vector>

namespace contentforge::zip {

// Minimal ZIP container support: stored and deflate entries, no ZIP64, no
// encryption. All ZIP integers are little-endian.

inline constexpr std::uint16_t method_stored = 0;
inline constexpr std::uint16_t method_deflate = 8;

inline constexpr std::uint16_t dos_date_1980 = (0 << 9) | (1 << 5) | 1; // 1980-01-01
inline constexpr std::uint16_t dos_time_midnight = 0;

inline constexpr std::uint32_t sig_local = 0x04034b50;
inline constexpr std::uint32_t sig_central = 0x02014b50;
inline constexpr std::uint32_t sig_end = 0x06054b50;

inline std::uint32_t crc32(std::span<const std::uint8_t> data)
{
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    std::size_t pos = 0;
    while (pos < data.size()) {
        auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - pos, 1u << 30));
        crc = ::crc32(crc, data.data() + pos, n);
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

/// Raw deflate (no zlib header), as stored in ZIP entries.
inline Bytes deflate(std::span<const std::uint8_t> data, int level = 6)
{
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error(Errc::io, "deflateInit2 failed");
    Bytes out(deflateBound(&zs, static_cast<uLong>(data.size())));
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = ::deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END)
        throw Error(Errc::io, "deflate failed");
    out.resize(zs.total_out);
    return out;
}

inline Bytes inflate(std::span<const std::uint8_t> data, std::size_t expected_size)
{
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK)
        throw Error(Errc::io, "inflateInit2 failed");
    Bytes out(expected_size);
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = ::inflate(&zs, Z_FINISH);
    auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected_size)
        throw Error(Errc::malformed_archive, "deflate stream is corrupt or does not match the declared size");
    return out;
}

struct Entry {
    std::string path;
    std::uint16_t method = method_stored;
    std::uint16_t flags = 0;
    std::uint16_t mod_time = dos_time_midnight;
    std::uint16_t mod_date = dos_date_1980;
    std::uint32_t crc = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t external_attr = 0;
    Bytes payload; // as stored in the archive (compressed for deflate)
};

inline std::pair<std::uint16_t, std::uint16_t> dos_now()
{
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    localtime_r(&t, &tm);
    auto year = std::max(tm.tm_year + 1900, 1980);
    auto time = static_cast<std::uint16_t>((tm.tm_hour << 11) | (tm.tm_min << 5) | (tm.tm_sec / 2));
    auto date = static_cast<std::uint16_t>(((year - 1980) << 9) | ((tm.tm_mon + 1) << 5) | tm.tm_mday);
    return {time, date};
}

inline Entry make_entry(std::string path, std::span<const std::uint8_t> data, bool compress)
{
    if (data.size() > 0xFFFFFFFFull)
        throw Error(Errc::oversize, path + " exceeds 4 GiB (ZIP64 is not supported)");
    Entry e;
    e.path = std::move(path);
    e.crc = crc32(data);
    e.uncompressed_size = static_cast<std::uint32_t>(data.size());
    if (compress) {
        auto packed = deflate(data);
        if (packed.size() < data.size()) {
            e.method = method_deflate;
            e.payload = std::move(packed);
            return e;
        }
    }
    e.method = method_stored;
    e.payload.assign(data.begin(), data.end());
    return e;
}

/// Decompresses an entry without checking its CRC.
inline Bytes decompress(const Entry& e)
{
    if (e.method == method_stored) {
        if (e.payload.size() != e.uncompressed_size)
            throw Error(Errc::malformed_archive, e.path + ": stored size does not match");
        return e.payload;
    }
    if (e.method == method_deflate)
        return inflate(e.payload, e.uncompressed_size);
    throw Error(Errc::unsupported_method, e.path + ": compression method " + std::to_string(e.method));
}

/// Decompresses an entry and checks its CRC.
inline Bytes data(const Entry& e)
{
    auto out = decompress(e);
    if (crc32(out) != e.crc)
        throw Error(Errc::malformed_archive, e.path + ": CRC mismatch");
    return out;
}

namespace detail {

class LeReader {
public:
    LeReader(std::span<const std::uint8_t> d, std::size_t pos) : d_(d), pos_(pos) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }

    std::span<const std::uint8_t> raw(std::size_t n)
    {
        need(n);
        auto s = d_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const
    {
        if (pos_ > d_.size() || n > d_.size() - pos_)
            throw Error(Errc::malformed_archive, "archive truncated at byte " + std::to_string(pos_));
    }

    std::uint64_t get(int n)
    {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = n - 1; i >= 0; --i)
            v = (v << 8) | d_[pos_ + static_cast<std::size_t>(i)];
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> d_;
    std::size_t pos_;
};

class LeWriter {
public:
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void raw(std::span<const std::uint8_t> b) { buf.insert(buf.end(), b.begin(), b.end()); }
    void raw(std::string_view s) { buf.insert(buf.end(), s.begin(), s.end()); }

    Bytes buf;

private:
    void put(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i)
            buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

inline std::size_t find_end_record(std::span<const std::uint8_t> d)
{
    if (d.size() < 22)
        throw Error(Errc::malformed_archive, "archive shorter than an end-of-central-directory record");
    std::size_t lowest = d.size() > 22 + 0xFFFF ? d.size() - 22 - 0xFFFF : 0;
    for (std::size_t p = d.size() - 22 + 1; p-- > lowest;)
        if (d[p] == 0x50 && d[p + 1] == 0x4b && d[p + 2] == 0x05 && d[p + 3] == 0x06)
            return p;
    throw Error(Errc::malformed_archive, "no end-of-central-directory signature");
}

} // namespace detail

/// Parses every entry listed in the central directory, in directory order.
inline std::vector<Entry> read(std::span<const std::uint8_t> archive)
{
    auto end_pos = detail::find_end_record(archive);
    detail::LeReader end(archive, end_pos + 4);
    auto disk = end.u16();
    auto cd_disk = end.u16();
    auto disk_entries = end.u16();
    auto total_entries = end.u16();
    auto cd_size = end.u32();
    auto cd_offset = end.u32();
    if (disk != 0 || cd_disk != 0 || disk_entries != total_entries)
        throw Error(Errc::malformed_archive, "multi-disk archives are not supported");
    if (cd_offset == 0xFFFFFFFF || total_entries == 0xFFFF)
        throw Error(Errc::oversize, "ZIP64 archives are not supported");
    if (static_cast<std::uint64_t>(cd_offset) + cd_size > end_pos)
        throw Error(Errc::malformed_archive, "central directory extends past its end record");

    std::vector<Entry> entries;
    detail::LeReader cd(archive.first(end_pos), cd_offset);
    for (std::uint16_t i = 0; i < total_entries; ++i) {
        if (cd.u32() != sig_central)
            throw Error(Errc::malformed_archive, "bad central directory signature for entry " + std::to_string(i));
        Entry e;
        cd.u16(); // version made by
        cd.u16(); // version needed
        e.flags = cd.u16();
        e.method = cd.u16();
        e.mod_time = cd.u16();
        e.mod_date = cd.u16();
        e.crc = cd.u32();
        auto csize = cd.u32();
        e.uncompressed_size = cd.u32();
        auto name_len = cd.u16();
        auto extra_len = cd.u16();
        auto comment_len = cd.u16();
        cd.u16(); // disk start
        cd.u16(); // internal attributes
        e.external_attr = cd.u32();
        auto local_offset = cd.u32();
        auto name = cd.raw(name_len);
        e.path.assign(name.begin(), name.end());
        cd.raw(extra_len);
        cd.raw(comment_len);
        if (e.flags & 0x1)
            throw Error(Errc::unsupported_method, e.path + ": encrypted entries are not supported");
        if (csize == 0xFFFFFFFF || e.uncompressed_size == 0xFFFFFFFF || local_offset == 0xFFFFFFFF)
            throw Error(Errc::oversize, e.path + ": ZIP64 entries are not supported");
        if (e.method != method_stored && e.method != method_deflate)
            throw Error(Errc::unsupported_method, e.path + ": compression method " + std::to_string(e.method));

        detail::LeReader local(archive.first(cd_offset), local_offset);
        if (local.u32() != sig_local)
            throw Error(Errc::malformed_archive, e.path + ": bad local header signature");
        local.raw(22);
        auto lname = local.u16();
        auto lextra = local.u16();
        local.raw(lname);
        local.raw(lextra);
        auto payload = local.raw(csize);
        e.payload.assign(payload.begin(), payload.end());
        e.flags &= ~std::uint16_t{0x8}; // sizes now live in the local header
        entries.push_back(std::move(e));
    }
    return entries;
}

inline Bytes write(const std::vector<Entry>& entries)
{
    if (entries.size() >= 0xFFFF)
        throw Error(Errc::oversize, "too many entries for a non-ZIP64 archive");
    detail::LeWriter w;
    std::vector<std::uint32_t> offsets;
    auto check_offset = [&] {
        if (w.buf.size() > 0xFFFFFFFFull)
            throw Error(Errc::oversize, "archive exceeds 4 GiB (ZIP64 is not supported)");
    };
    auto flags_of = [](const Entry& e) {
        std::uint16_t f = e.flags & 0x0806; // keep UTF-8 and deflate-option bits
        for (unsigned char c : e.path)
            if (c >= 0x80)
                f |= 0x0800;
        return f;
    };
    for (const auto& e : entries) {
        if (e.path.size() > 0xFFFF)
            throw Error(Errc::invalid_path, "entry name too long");
        check_offset();
        offsets.push_back(static_cast<std::uint32_t>(w.buf.size()));
        w.u32(sig_local);
        w.u16(20);
        w.u16(flags_of(e));
        w.u16(e.method);
        w.u16(e.mod_time);
        w.u16(e.mod_date);
        w.u32(e.crc);
        w.u32(static_cast<std::uint32_t>(e.payload.size()));
        w.u32(e.uncompressed_size);
        w.u16(static_cast<std::uint16_t>(e.path.size()));
        w.u16(0);
        w.raw(e.path);
        w.raw(e.payload);
    }
    check_offset();
    auto cd_start = w.buf.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        w.u32(sig_central);
        w.u16(20); // made by: MS-DOS, version 2.0
        w.u16(20);
        w.u16(flags_of(e));
        w.u16(e.method);
        w.u16(e.mod_time);
        w.u16(e.mod_date);
        w.u32(e.crc);
        w.u32(static_cast<std::uint32_t>(e.payload.size()));
        w.u32(e.uncompressed_size);
        w.u16(static_cast<std::uint16_t>(e.path.size()));
        w.u16(0);
        w.u16(0);
        w.u16(0);
        w.u16(0);
        w.u32(e.external_attr);
        w.u32(offsets[i]);
        w.raw(e.path);
    }
    check_offset();
    auto cd_size = w.buf.size() - cd_start;
    w.u32(sig_end);
    w.u16(0);
    w.u16(0);
    w.u16(static_cast<std::uint16_t>(entries.size()));
    w.u16(static_cast<std::uint16_t>(entries.size()));
    w.u32(static_cast<std::uint32_t>(cd_size));
    w.u32(static_cast<std::uint32_t>(cd_start));
    w.u16(0);
    return std::move(w.buf);
}

} // namespace contentforge::zip
