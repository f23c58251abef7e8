#pragma once

#include <contentforge/bundle.hpp>
#include <contentforge/engine.hpp>
#include <contentforge/text_shaper.hpp>

#include <algorithm>
#include <cstdint>

namespace contentforge {

inline constexpr int icon_size = 12;

inline Rgb text_color(const Theme& theme, const ContentRecord& rec)
{
    if (rec.color_index < theme.palette.size())
        return theme.palette[rec.color_index];
    return theme.text;
}

namespace detail {

// 12x12 placeholder at the right edge (the reading start of an RTL row):
// a highlight-colored frame with one inner marker per kind tag bit.
inline void draw_icon(Image& img, const Theme& theme, ContentKind kind, int row_top)
{
    int left = img.width - icon_size - 2;
    int top = row_top + (media_row_height - icon_size) / 2;
    img.fill_rect(left, top, icon_size, icon_size, theme.highlight);
    img.fill_rect(left + 1, top + 1, icon_size - 2, icon_size - 2, theme.background);
    auto tag = static_cast<int>(kind);
    for (int bit = 0; bit < 3; ++bit)
        if (tag & (1 << bit))
            img.fill_rect(left + 2 + bit * 3, top + 4, 2, 4, theme.highlight);
    if (kind == ContentKind::text || tag == 0)
        img.fill_rect(left + 3, top + 3, 6, 6, theme.highlight);
}

} // namespace detail

/// Offline preview of one page: a header band with the title, then each
/// content row top to bottom.
inline Image render_page(const Bundle& bundle, std::uint32_t page_id, int width)
{
    const auto* entry = bundle.index.find(page_id);
    if (!entry)
        throw Error(Errc::unknown_page, "page " + std::to_string(page_id) + " is not in the index");
    const auto& atlas = bundle.atlas;
    const auto& theme = bundle.theme;
    if (width < atlas.widest_advance())
        throw Error(Errc::invalid_argument, "width " + std::to_string(width) + " is narrower than the widest glyph");

    auto records = bundle.page(page_id);
    auto title = shape_text(atlas, entry->title, width, theme.text);
    int header = std::max<int>(atlas.line_height, title.total_height);
    auto rows = layout_rows(records, atlas, width);
    int body = rows.empty() ? 0 : rows.back().bottom();

    Image img(width, header + body, theme.background);
    img.fill_rect(0, 0, width, header, theme.header);
    draw_layout(img, title, atlas);
    for (const auto& row : rows) {
        const auto& rec = records[row.item_index];
        int top = header + row.top;
        if (rec.kind == ContentKind::text)
            draw_layout(img, shape_text(atlas, rec.body, width, text_color(theme, rec)), atlas, 0, top);
        else
            detail::draw_icon(img, theme, rec.kind, top);
    }
    return img;
}

} // namespace contentforge
