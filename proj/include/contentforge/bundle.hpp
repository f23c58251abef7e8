#pragma once

#include <contentforge/bundle_codec.hpp>
#include <contentforge/byte_io.hpp>
#include <contentforge/text_shaper.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace contentforge {

inline const char* const index_file_name = "index.bin";
inline const char* const content_file_name = "content.bin";
inline const char* const theme_file_name = "theme.bin";
inline const char* const font_file_name = "font.bin";
inline const char* const asset_dir_name = "assets";

/// Opens a fresh reader positioned at the start of the content file.
using ContentOpener = std::function<std::unique_ptr<ByteSource>()>;
using AssetLoader = std::function<std::optional<Bytes>(const std::string&)>;

/// A loaded bundle. Index metadata stays resident; page content is read
/// through `open_content` streams.
struct Bundle {
    BundleIndex index;
    Theme theme;
    GlyphAtlas atlas;
    ContentOpener open_content;
    AssetLoader load_asset;

    std::vector<ContentRecord> page(std::uint32_t page_id) const
    {
        auto reader = open_content();
        return read_page(*reader, index, page_id);
    }
};

inline std::shared_ptr<const Bundle> make_bundle(const BundleFiles& files)
{
    auto b = std::make_shared<Bundle>();
    b->index = decode_index(files.index_bytes);
    b->theme = decode_theme(files.theme_bytes);
    b->atlas = decode_font(files.font_bytes);
    auto content = std::make_shared<const Bytes>(files.content_bytes);
    b->open_content = [content] { return std::make_unique<MemorySource>(content); };
    auto assets = std::make_shared<const AssetMap>(files.assets);
    b->load_asset = [assets](const std::string& ref) -> std::optional<Bytes> {
        auto it = assets->find(ref);
        if (it == assets->end())
            return std::nullopt;
        return it->second;
    };
    return b;
}

/// Loads a compiled bundle directory without reading content.bin.
inline std::shared_ptr<const Bundle> open_bundle_dir(const std::filesystem::path& dir)
{
    auto b = std::make_shared<Bundle>();
    b->index = decode_index(read_file((dir / index_file_name).string()));
    b->theme = decode_theme(read_file((dir / theme_file_name).string()));
    b->atlas = decode_font(read_file((dir / font_file_name).string()));
    auto content_path = (dir / content_file_name).string();
    if (!std::filesystem::is_regular_file(content_path))
        throw Error(Errc::io, "missing " + content_path);
    b->open_content = [content_path] { return std::make_unique<FileSource>(content_path); };
    auto asset_root = dir / asset_dir_name;
    b->load_asset = [asset_root](const std::string& ref) -> std::optional<Bytes> {
        if (!is_safe_relative_path(ref))
            return std::nullopt;
        auto p = asset_root / ref;
        if (!std::filesystem::is_regular_file(p))
            return std::nullopt;
        return read_file(p.string());
    };
    return b;
}

inline void write_bundle_dir(const BundleFiles& files, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_file((dir / index_file_name).string(), files.index_bytes);
    write_file((dir / content_file_name).string(), files.content_bytes);
    write_file((dir / theme_file_name).string(), files.theme_bytes);
    write_file((dir / font_file_name).string(), files.font_bytes);
    for (const auto& [ref, data] : files.assets) {
        if (!is_safe_relative_path(ref))
            throw Error(Errc::invalid_path, "unsafe asset path " + ref);
        auto p = dir / asset_dir_name / ref;
        std::filesystem::create_directories(p.parent_path());
        write_file(p.string(), data);
    }
}

/// Reads every bundle file, including all assets, into memory.
inline BundleFiles read_bundle_dir(const std::filesystem::path& dir)
{
    BundleFiles files;
    files.index_bytes = read_file((dir / index_file_name).string());
    files.content_bytes = read_file((dir / content_file_name).string());
    files.theme_bytes = read_file((dir / theme_file_name).string());
    files.font_bytes = read_file((dir / font_file_name).string());
    auto asset_root = dir / asset_dir_name;
    if (std::filesystem::is_directory(asset_root)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(asset_root)) {
            if (!entry.is_regular_file())
                continue;
            auto rel = std::filesystem::relative(entry.path(), asset_root).generic_string();
            files.assets[rel] = read_file(entry.path().string());
        }
    }
    return files;
}

} // namespace contentforge
