#pragma once

#include <contentforge/error.hpp>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace contentforge {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s)
{
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const std::uint8_t> b)
{
    return std::string(b.begin(), b.end());
}

// Big-endian writer used by every bundle file.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void i8(std::int8_t v) { buf_.push_back(static_cast<std::uint8_t>(v)); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }

    void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    void string16(std::string_view s)
    {
        if (s.size() > std::numeric_limits<std::uint16_t>::max())
            throw Error(Errc::invalid_argument,
                        "string of " + std::to_string(s.size()) + " bytes exceeds the 65535-byte limit");
        u16(static_cast<std::uint16_t>(s.size()));
        raw(s);
    }

    void string32(std::string_view s)
    {
        if (s.size() > std::numeric_limits<std::uint32_t>::max())
            throw Error(Errc::invalid_argument, "string exceeds the 4 GiB limit");
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

    std::size_t size() const noexcept { return buf_.size(); }
    const Bytes& bytes() const& noexcept { return buf_; }
    Bytes bytes() && noexcept { return std::move(buf_); }

private:
    void put(std::uint64_t v, int width)
    {
        for (int shift = (width - 1) * 8; shift >= 0; shift -= 8)
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }

    Bytes buf_;
};

// Big-endian cursor over an in-memory buffer. Every read past the end
// throws Errc::truncated.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::int8_t i8() { return static_cast<std::int8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }

    std::span<const std::uint8_t> raw(std::size_t n)
    {
        require(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::string string16() { return take_string(u16()); }
    std::string string32() { return take_string(u32()); }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void require(std::size_t n) const
    {
        if (n > remaining())
            throw Error(Errc::truncated, "unexpected end of data at byte " + std::to_string(pos_) + " (need " +
                                             std::to_string(n) + ", have " + std::to_string(remaining()) + ")");
    }

    std::uint64_t get(int width)
    {
        require(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int k = 0; k < width; ++k)
            v = (v << 8) | data_[pos_ + static_cast<std::size_t>(k)];
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::string take_string(std::size_t n)
    {
        auto b = raw(n);
        return std::string(b.begin(), b.end());
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Forward-only byte source with a skip primitive. Mirrors a data stream
/// that can discard bytes but cannot seek backwards.
class ByteSource {
public:
    virtual ~ByteSource() = default;

    /// Reads up to out.size() bytes; returns the count read, 0 at end.
    virtual std::size_t read(std::span<std::uint8_t> out) = 0;

    /// Discards up to n bytes; returns the count actually skipped.
    virtual std::uint64_t skip(std::uint64_t n) = 0;
};

inline Bytes read_exact(ByteSource& src, std::size_t n)
{
    Bytes out(n);
    std::size_t got = 0;
    while (got < n) {
        auto k = src.read(std::span(out).subspan(got));
        if (k == 0)
            throw Error(Errc::truncated,
                        "source ended after " + std::to_string(got) + " of " + std::to_string(n) + " bytes");
        got += k;
    }
    return out;
}

inline void skip_exact(ByteSource& src, std::uint64_t n)
{
    auto skipped = src.skip(n);
    if (skipped != n)
        throw Error(Errc::truncated,
                    "source ended after skipping " + std::to_string(skipped) + " of " + std::to_string(n) + " bytes");
}

class MemorySource final : public ByteSource {
public:
    explicit MemorySource(std::span<const std::uint8_t> data) : data_(data) {}

    /// Keeps the buffer alive for the lifetime of the source.
    explicit MemorySource(std::shared_ptr<const Bytes> owned) : owned_(std::move(owned)), data_(*owned_) {}

    std::size_t read(std::span<std::uint8_t> out) override
    {
        auto n = std::min(out.size(), data_.size() - pos_);
        std::memcpy(out.data(), data_.data() + pos_, n);
        pos_ += n;
        return n;
    }

    std::uint64_t skip(std::uint64_t n) override
    {
        auto k = std::min<std::uint64_t>(n, data_.size() - pos_);
        pos_ += static_cast<std::size_t>(k);
        return k;
    }

private:
    std::shared_ptr<const Bytes> owned_;
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

class FileSource final : public ByteSource {
public:
    explicit FileSource(const std::string& path) : in_(path, std::ios::binary)
    {
        if (!in_)
            throw Error(Errc::io, "cannot open " + path);
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0, std::ios::beg);
    }

    std::size_t read(std::span<std::uint8_t> out) override
    {
        in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
        auto n = static_cast<std::size_t>(in_.gcount());
        pos_ += n;
        return n;
    }

    std::uint64_t skip(std::uint64_t n) override
    {
        auto k = std::min(n, size_ - pos_);
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(pos_ + k), std::ios::beg);
        pos_ += k;
        return k;
    }

private:
    std::ifstream in_;
    std::uint64_t size_ = 0;
    std::uint64_t pos_ = 0;
};

/// Decorator recording how many bytes were read versus skipped.
class CountingSource final : public ByteSource {
public:
    explicit CountingSource(ByteSource& inner) : inner_(&inner) {}

    std::size_t read(std::span<std::uint8_t> out) override
    {
        auto n = inner_->read(out);
        bytes_read_ += n;
        return n;
    }

    std::uint64_t skip(std::uint64_t n) override
    {
        auto k = inner_->skip(n);
        bytes_skipped_ += k;
        return k;
    }

    std::uint64_t bytes_read() const noexcept { return bytes_read_; }
    std::uint64_t bytes_skipped() const noexcept { return bytes_skipped_; }

private:
    ByteSource* inner_;
    std::uint64_t bytes_read_ = 0;
    std::uint64_t bytes_skipped_ = 0;
};

inline Bytes read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, "cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out)
        throw Error(Errc::io, "short write to " + path);
}

} // namespace contentforge
