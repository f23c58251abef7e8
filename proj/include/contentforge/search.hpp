#pragma once

#include <contentforge/bundle.hpp>
#include <contentforge/bundle_codec.hpp>
#include <contentforge/utf8.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace contentforge {

enum class FoldMode {
    none,
    simple_case, // Unicode simple lowercase; Arabic letter variants are not unified
};

struct SearchMatch {
    std::uint32_t page_id = 0;
    std::optional<std::size_t> item_index; // empty for a title match
    std::size_t char_offset = 0;           // in code points
    std::string snippet;

    bool operator==(const SearchMatch&) const = default;
};

inline constexpr std::size_t snippet_context = 20;

inline std::u32string fold(std::u32string_view s, FoldMode mode)
{
    return mode == FoldMode::simple_case ? utf8::fold_case(s) : std::u32string(s);
}

/// Every (possibly overlapping) occurrence of `needle` in `text`, with a
/// snippet of up to snippet_context code points on each side.
inline void find_occurrences(std::string_view text, std::u32string_view folded_needle, FoldMode mode,
                             std::uint32_t page_id, std::optional<std::size_t> item_index,
                             std::vector<SearchMatch>& out)
{
    auto original = utf8::decode(text);
    auto hay = fold(original, mode);
    if (folded_needle.empty() || hay.size() < folded_needle.size())
        return;
    auto it = hay.begin();
    while (true) {
        it = std::search(it, hay.end(), folded_needle.begin(), folded_needle.end());
        if (it == hay.end())
            break;
        auto off = static_cast<std::size_t>(it - hay.begin());
        auto from = off > snippet_context ? off - snippet_context : 0;
        auto to = std::min(original.size(), off + folded_needle.size() + snippet_context);
        out.push_back({page_id, item_index, off,
                       utf8::encode(std::u32string_view(original).substr(from, to - from))});
        ++it;
    }
}

/// Scans page titles and text items in index order, reading one page at a
/// time. Matches are ordered by page position, then title before items,
/// then item index and offset.
inline std::vector<SearchMatch> search_content(const BundleIndex& index, const ContentOpener& open_content,
                                               std::string_view query, FoldMode mode = FoldMode::simple_case)
{
    auto needle = fold(utf8::decode(query), mode);
    if (needle.empty())
        throw Error(Errc::invalid_argument, "search query is empty");
    std::vector<SearchMatch> matches;
    for (const auto& entry : index.entries) {
        find_occurrences(entry.title, needle, mode, entry.page_id, std::nullopt, matches);
        auto reader = open_content();
        auto records = read_page(*reader, index, entry.page_id);
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].kind == ContentKind::text)
                find_occurrences(records[i].body, needle, mode, entry.page_id, i, matches);
    }
    return matches;
}

inline std::vector<SearchMatch> search_content(const Bundle& bundle, std::string_view query,
                                               FoldMode mode = FoldMode::simple_case)
{
    return search_content(bundle.index, bundle.open_content, query, mode);
}

} // namespace contentforge
