#pragma once

#include <contentforge/byte_io.hpp>
#include <contentforge/content_model.hpp>
#include <contentforge/error.hpp>
#include <contentforge/utf8.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace contentforge {

// Wire values match the font file.
enum class JoiningClass : std::uint8_t {
    non_joining = 0,
    right = 1, // joins only to the preceding letter
    dual = 2,
};

enum class GlyphForm : std::uint8_t {
    isolated = 0,
    initial = 1,
    medial = 2,
    final = 3,
};

inline std::string_view to_string(JoiningClass c)
{
    switch (c) {
    case JoiningClass::non_joining: return "non_joining";
    case JoiningClass::right: return "right";
    case JoiningClass::dual: return "dual";
    }
    return "?";
}

inline std::string_view to_string(GlyphForm f)
{
    switch (f) {
    case GlyphForm::isolated: return "isolated";
    case GlyphForm::initial: return "initial";
    case GlyphForm::medial: return "medial";
    case GlyphForm::final: return "final";
    }
    return "?";
}

inline constexpr char32_t replacement_codepoint = 0xFFFFFFFF;

struct GlyphKey {
    char32_t codepoint = 0;
    GlyphForm form = GlyphForm::isolated;

    auto operator<=>(const GlyphKey&) const = default;
};

/// A 1-bit-per-pixel glyph. Rows are row-major, MSB first, each padded to a
/// whole byte.
struct Glyph {
    char32_t codepoint = 0;
    GlyphForm form = GlyphForm::isolated;
    std::uint8_t width = 0;
    std::uint8_t height = 0;
    std::int8_t x_bearing = 0;
    std::int8_t y_bearing = 0;
    std::uint8_t advance = 0;
    Bytes bitmap;

    std::size_t row_bytes() const noexcept { return (width + 7u) / 8u; }
    std::size_t expected_bitmap_size() const noexcept { return row_bytes() * height; }

    bool pixel(int x, int y) const
    {
        auto byte = bitmap[static_cast<std::size_t>(y) * row_bytes() + static_cast<std::size_t>(x) / 8];
        return (byte >> (7 - x % 8)) & 1;
    }

    GlyphKey key() const noexcept { return {codepoint, form}; }

    bool operator==(const Glyph&) const = default;
};

struct GlyphAtlas {
    std::uint8_t line_height = 16;
    std::uint8_t baseline = 12;
    std::uint8_t space_width = 4;
    Glyph replacement;
    std::map<GlyphKey, Glyph> glyphs;
    std::map<char32_t, JoiningClass> joining;

    const Glyph* find(GlyphKey key) const
    {
        if (key.codepoint == replacement_codepoint && key.form == GlyphForm::isolated)
            return &replacement;
        auto it = glyphs.find(key);
        return it == glyphs.end() ? nullptr : &it->second;
    }

    bool covers(char32_t cp) const
    {
        auto it = glyphs.lower_bound(GlyphKey{cp, GlyphForm::isolated});
        return it != glyphs.end() && it->first.codepoint == cp;
    }

    int widest_advance() const
    {
        int w = replacement.advance;
        for (const auto& [key, g] : glyphs)
            w = std::max<int>(w, g.advance);
        return w;
    }

    bool operator==(const GlyphAtlas&) const = default;
};

// --- joining classification -------------------------------------------------

/// Combining marks (tashkeel and Quranic annotation signs). They are
/// transparent to joining and drawn with zero advance.
inline constexpr bool is_transparent_mark(char32_t cp)
{
    return (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670 || (cp >= 0x06D6 && cp <= 0x06DC) ||
           (cp >= 0x06DF && cp <= 0x06E4) || cp == 0x06E7 || cp == 0x06E8 || (cp >= 0x06EA && cp <= 0x06ED);
}

/// Joining classes for the Arabic letters and the common Persian additions.
/// Letters missing here are non-joining.
inline std::map<char32_t, JoiningClass> default_joining_table()
{
    constexpr auto D = JoiningClass::dual;
    constexpr auto R = JoiningClass::right;
    constexpr auto U = JoiningClass::non_joining;
    std::map<char32_t, JoiningClass> t;
    t[0x0621] = U; // hamza
    for (char32_t cp : {0x0622, 0x0623, 0x0624, 0x0625, 0x0627, 0x0629, 0x062F, 0x0630, 0x0631, 0x0632, 0x0648, 0x0671,
                        0x0698})
        t[cp] = R;
    for (char32_t cp = 0x0626; cp <= 0x064A; ++cp)
        if (!t.contains(cp))
            t[cp] = D;
    for (char32_t cp : {0x067E, 0x0686, 0x06A9, 0x06AF, 0x06CC})
        t[cp] = D;
    return t;
}

inline JoiningClass joining_class(const GlyphAtlas& atlas, char32_t cp)
{
    auto it = atlas.joining.find(cp);
    return it == atlas.joining.end() ? JoiningClass::non_joining : it->second;
}

/// Picks the presentation form of a letter from its neighbours within a word.
/// A letter connects to the previous one when that one is dual-joining, and
/// to the next one when it is itself dual-joining and the next letter joins
/// at all.
inline GlyphForm resolve_form(std::optional<JoiningClass> prev, JoiningClass self, std::optional<JoiningClass> next)
{
    if (self == JoiningClass::non_joining)
        return GlyphForm::isolated;
    bool to_prev = prev == JoiningClass::dual;
    bool to_next = self == JoiningClass::dual && next && *next != JoiningClass::non_joining;
    if (to_prev && to_next)
        return GlyphForm::medial;
    if (to_next)
        return GlyphForm::initial;
    if (to_prev)
        return GlyphForm::final;
    return GlyphForm::isolated;
}

// --- layout ---------------------------------------------------------------

struct PositionedGlyph {
    GlyphKey glyph; // the glyph actually drawn (after fallback)
    int x = 0;      // top-left of the glyph cell
    int y = 0;
    Rgb color;

    bool operator==(const PositionedGlyph&) const = default;
};

struct LayoutResult {
    std::vector<std::vector<PositionedGlyph>> lines;
    std::vector<int> line_widths;
    int total_height = 0;
    int max_line_width = 0;

    bool operator==(const LayoutResult&) const = default;
};

inline constexpr int unbounded_width = std::numeric_limits<int>::max();

namespace detail {

struct ShapedGlyph {
    GlyphKey key;
    int advance = 0;
    bool mark = false;
};

inline constexpr char32_t zero_width_non_joiner = 0x200C;

inline const Glyph& select_glyph(const GlyphAtlas& atlas, char32_t cp, GlyphForm form)
{
    if (auto g = atlas.find({cp, form}))
        return *g;
    if (auto g = atlas.find({cp, GlyphForm::isolated}))
        return *g;
    return atlas.replacement;
}

inline std::vector<ShapedGlyph> shape_word(const GlyphAtlas& atlas, std::u32string_view word)
{
    std::vector<std::size_t> letters; // positions of non-mark code points
    for (std::size_t i = 0; i < word.size(); ++i)
        if (!is_transparent_mark(word[i]))
            letters.push_back(i);

    std::vector<GlyphForm> forms(word.size(), GlyphForm::isolated);
    for (std::size_t k = 0; k < letters.size(); ++k) {
        std::optional<JoiningClass> prev, next;
        if (k > 0)
            prev = joining_class(atlas, word[letters[k - 1]]);
        if (k + 1 < letters.size())
            next = joining_class(atlas, word[letters[k + 1]]);
        forms[letters[k]] = resolve_form(prev, joining_class(atlas, word[letters[k]]), next);
    }

    std::vector<ShapedGlyph> out;
    out.reserve(word.size());
    for (std::size_t i = 0; i < word.size(); ++i) {
        char32_t cp = word[i];
        if (cp == zero_width_non_joiner)
            continue;
        if (is_transparent_mark(cp)) {
            auto g = atlas.find({cp, GlyphForm::isolated});
            if (g && !out.empty())
                out.push_back({g->key(), 0, true});
            continue;
        }
        const auto& g = select_glyph(atlas, cp, forms[i]);
        out.push_back({g.key(), g.advance, false});
    }
    return out;
}

inline int word_width(const std::vector<ShapedGlyph>& word)
{
    int w = 0;
    for (const auto& g : word)
        w += g.advance;
    return w;
}

inline std::vector<std::u32string_view> split_words(std::u32string_view text)
{
    std::vector<std::u32string_view> words;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find(U' ', start);
        if (end == std::u32string_view::npos)
            end = text.size();
        if (end > start)
            words.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return words;
}

} // namespace detail

/// Lays out text right-to-left within max_width pixels. Words are separated
/// by U+0020 (runs of spaces collapse), wrapped at word boundaries, and a
/// word wider than a whole line is broken between glyphs without reshaping.
inline LayoutResult shape_text(const GlyphAtlas& atlas, std::string_view text, int max_width, Rgb color)
{
    if (max_width < atlas.widest_advance())
        throw Error(Errc::invalid_argument, "max_width " + std::to_string(max_width) +
                                                " is narrower than the widest glyph advance " +
                                                std::to_string(atlas.widest_advance()));
    LayoutResult result;
    auto cps = utf8::decode(text);
    const int space = atlas.space_width;

    int used = 0;
    auto new_line = [&] {
        result.lines.emplace_back();
        result.line_widths.push_back(0);
        used = 0;
    };
    auto place = [&](const detail::ShapedGlyph& g) {
        auto& line = result.lines.back();
        int y = static_cast<int>(result.lines.size() - 1) * atlas.line_height;
        int x;
        if (g.mark)
            x = line.empty() ? max_width - used : line.back().x;
        else
            x = max_width - used - g.advance;
        line.push_back({g.key, x, y, color});
        used += g.advance;
        result.line_widths.back() = used;
    };

    for (auto word_text : detail::split_words(cps)) {
        auto word = detail::shape_word(atlas, word_text);
        if (word.empty())
            continue;
        int width = detail::word_width(word);
        if (result.lines.empty()) {
            new_line();
        } else if (used > 0 && static_cast<long long>(used) + space + width > max_width) {
            new_line();
        } else if (used > 0) {
            used += space;
        }
        if (static_cast<long long>(used) + width <= max_width) {
            for (const auto& g : word)
                place(g);
            continue;
        }
        // Oversize word: fill glyph by glyph.
        for (const auto& g : word) {
            if (used > 0 && static_cast<long long>(used) + g.advance > max_width)
                new_line();
            place(g);
        }
    }

    result.total_height = static_cast<int>(result.lines.size()) * atlas.line_height;
    for (int w : result.line_widths)
        result.max_line_width = std::max(result.max_line_width, w);
    return result;
}

/// Width of text on a single unbounded line.
inline int measure(const GlyphAtlas& atlas, std::string_view text)
{
    auto cps = utf8::decode(text);
    int total = 0;
    int words = 0;
    for (auto w : detail::split_words(cps)) {
        auto shaped = detail::shape_word(atlas, w);
        if (shaped.empty())
            continue;
        total += detail::word_width(shaped);
        ++words;
    }
    return words == 0 ? 0 : total + (words - 1) * atlas.space_width;
}

// --- rasterization --------------------------------------------------------

struct Image {
    int width = 0;
    int height = 0;
    Bytes rgb; // row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3)
    {
        fill_rect(0, 0, w, h, fill);
    }

    Rgb at(int x, int y) const
    {
        auto i = (static_cast<std::size_t>(y) * width + x) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }

    void set(int x, int y, Rgb c)
    {
        auto i = (static_cast<std::size_t>(y) * width + x) * 3;
        rgb[i] = c.r;
        rgb[i + 1] = c.g;
        rgb[i + 2] = c.b;
    }

    // Clipped to the canvas.
    void fill_rect(int x, int y, int w, int h, Rgb c)
    {
        for (int yy = std::max(0, y); yy < std::min(height, y + h); ++yy)
            for (int xx = std::max(0, x); xx < std::min(width, x + w); ++xx)
                set(xx, yy, c);
    }

    bool operator==(const Image&) const = default;
};

/// Paints every glyph of a layout onto an existing canvas, offset by (dx, dy).
inline void draw_layout(Image& canvas, const LayoutResult& layout, const GlyphAtlas& atlas, int dx = 0, int dy = 0)
{
    for (std::size_t li = 0; li < layout.lines.size(); ++li) {
        for (std::size_t gi = 0; gi < layout.lines[li].size(); ++gi) {
            const auto& pg = layout.lines[li][gi];
            const Glyph& g = detail::select_glyph(atlas, pg.glyph.codepoint, pg.glyph.form);
            if (g.width == 0 || g.height == 0)
                continue;
            int left = dx + pg.x + g.x_bearing;
            int top = dy + pg.y + g.y_bearing;
            if (left < 0 || top < 0 || left + g.width > canvas.width || top + g.height > canvas.height)
                throw Error(Errc::canvas_overflow,
                            "glyph U+" + std::to_string(static_cast<std::uint32_t>(pg.glyph.codepoint)) + " (line " +
                                std::to_string(li) + ", index " + std::to_string(gi) + ") at (" + std::to_string(left) +
                                "," + std::to_string(top) + ") size " + std::to_string(g.width) + "x" +
                                std::to_string(g.height) + " exceeds canvas " + std::to_string(canvas.width) + "x" +
                                std::to_string(canvas.height));
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x)
                    if (g.pixel(x, y))
                        canvas.set(left + x, top + y, pg.color);
        }
    }
}

inline Image rasterize(const LayoutResult& layout, const GlyphAtlas& atlas, int canvas_width, int canvas_height,
                       Rgb background)
{
    if (canvas_width < 0 || canvas_height < 0)
        throw Error(Errc::invalid_argument, "negative canvas size");
    Image img(canvas_width, canvas_height, background);
    draw_layout(img, layout, atlas);
    return img;
}

/// Binary PPM (P6, max value 255).
inline Bytes to_ppm(const Image& img)
{
    std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    Bytes out(header.begin(), header.end());
    out.insert(out.end(), img.rgb.begin(), img.rgb.end());
    return out;
}

// --- atlas construction and codec -------------------------------------------

/// Forms an atlas must carry for a letter of the given class.
inline std::vector<GlyphForm> required_forms(JoiningClass c)
{
    switch (c) {
    case JoiningClass::dual: return {GlyphForm::isolated, GlyphForm::initial, GlyphForm::medial, GlyphForm::final};
    case JoiningClass::right: return {GlyphForm::isolated, GlyphForm::final};
    case JoiningClass::non_joining: return {GlyphForm::isolated};
    }
    return {};
}

/// Throws Errc::invalid_font when an atlas invariant does not hold.
inline void check_atlas(const GlyphAtlas& atlas)
{
    auto check_glyph = [](const Glyph& g) {
        if (g.bitmap.size() != g.expected_bitmap_size())
            throw Error(Errc::bitmap_size_mismatch, "glyph U+" + std::to_string(static_cast<std::uint32_t>(g.codepoint)) +
                                                        " bitmap has " + std::to_string(g.bitmap.size()) +
                                                        " bytes, expected " + std::to_string(g.expected_bitmap_size()));
    };
    if (atlas.replacement.codepoint != replacement_codepoint || atlas.replacement.form != GlyphForm::isolated)
        throw Error(Errc::invalid_font, "replacement glyph must have codepoint 0xFFFFFFFF and isolated form");
    check_glyph(atlas.replacement);
    for (const auto& [key, g] : atlas.glyphs) {
        if (key != g.key())
            throw Error(Errc::invalid_font, "glyph stored under a mismatched key");
        check_glyph(g);
    }
    for (const auto& [cp, cls] : atlas.joining) {
        if (!atlas.covers(cp))
            continue;
        for (auto form : required_forms(cls))
            if (!atlas.find({cp, form}))
                throw Error(Errc::invalid_font, "letter U+" + std::to_string(static_cast<std::uint32_t>(cp)) +
                                                    " of class " + std::string(to_string(cls)) + " lacks its " +
                                                    std::string(to_string(form)) + " form");
    }
}

struct AlphabetEntry {
    char32_t codepoint;
    JoiningClass joining;
};

namespace detail {

inline std::uint32_t mix32(std::uint32_t x)
{
    x ^= x >> 16;
    x *= 0x7feb352dU;
    x ^= x >> 15;
    x *= 0x846ca68bU;
    x ^= x >> 16;
    return x;
}

// 7x12 cell drawn in an 8-bit wide bitmap. Rows 1..7 carry a code-point
// dependent body, column 5 a stem, and row 9 (just above the baseline) the
// joining connectors: left half toward the following letter, right half
// toward the preceding one.
inline Glyph procedural_glyph(char32_t cp, GlyphForm form)
{
    Glyph g;
    g.codepoint = cp;
    g.form = form;
    g.width = 8;
    g.height = 12;
    g.x_bearing = 0;
    g.y_bearing = 2;
    g.advance = 8;
    g.bitmap.assign(12, 0);
    std::uint32_t h = mix32(static_cast<std::uint32_t>(cp)) | 1u;
    for (int row = 1; row <= 7; ++row) {
        auto bits = static_cast<std::uint8_t>((h >> ((row - 1) * 4)) & 0xF);
        g.bitmap[static_cast<std::size_t>(row)] = static_cast<std::uint8_t>(bits << 3); // columns 1..4
    }
    for (int row = 2; row <= 9; ++row)
        g.bitmap[static_cast<std::size_t>(row)] |= 0x04; // column 5
    switch (form) {
    case GlyphForm::initial: g.bitmap[9] |= 0xF0; break;
    case GlyphForm::final: g.bitmap[9] |= 0x0F; break;
    case GlyphForm::medial: g.bitmap[9] = 0xFF; break;
    case GlyphForm::isolated: g.bitmap[11] = 0x7C; break;
    }
    return g;
}

inline Glyph procedural_mark(char32_t cp)
{
    Glyph g;
    g.codepoint = cp;
    g.form = GlyphForm::isolated;
    g.width = 6;
    g.height = 2;
    g.x_bearing = 1;
    g.y_bearing = 0;
    g.advance = 0;
    std::uint32_t h = mix32(static_cast<std::uint32_t>(cp));
    g.bitmap = {static_cast<std::uint8_t>(0x78 | ((h & 1) << 7)), static_cast<std::uint8_t>((h >> 1) & 0xFC)};
    return g;
}

inline Glyph replacement_glyph()
{
    Glyph g;
    g.codepoint = replacement_codepoint;
    g.form = GlyphForm::isolated;
    g.width = 7;
    g.height = 12;
    g.x_bearing = 0;
    g.y_bearing = 2;
    g.advance = 8;
    g.bitmap.assign(12, 0x82);
    g.bitmap.front() = 0xFE;
    g.bitmap.back() = 0xFE;
    return g;
}

} // namespace detail

/// Builds a deterministic procedural atlas carrying every form each letter's
/// class requires, plus the hollow-box replacement glyph.
inline GlyphAtlas generate_test_font(const std::vector<AlphabetEntry>& alphabet)
{
    if (alphabet.empty())
        throw Error(Errc::invalid_argument, "alphabet is empty");
    GlyphAtlas atlas;
    atlas.replacement = detail::replacement_glyph();
    for (const auto& entry : alphabet) {
        if (atlas.joining.contains(entry.codepoint))
            throw Error(Errc::duplicate_codepoint,
                        "code point U+" + std::to_string(static_cast<std::uint32_t>(entry.codepoint)) + " listed twice");
        if (entry.codepoint == replacement_codepoint)
            throw Error(Errc::invalid_argument, "0xFFFFFFFF is reserved for the replacement glyph");
        atlas.joining[entry.codepoint] = entry.joining;
        if (is_transparent_mark(entry.codepoint)) {
            atlas.glyphs[{entry.codepoint, GlyphForm::isolated}] = detail::procedural_mark(entry.codepoint);
            continue;
        }
        for (auto form : required_forms(entry.joining))
            atlas.glyphs[{entry.codepoint, form}] = detail::procedural_glyph(entry.codepoint, form);
    }
    return atlas;
}

/// Alphabet of the built-in atlas: the default joining table, Arabic marks,
/// Arabic and Persian digits and punctuation, and printable ASCII.
inline std::vector<AlphabetEntry> builtin_alphabet()
{
    std::vector<AlphabetEntry> out;
    for (const auto& [cp, cls] : default_joining_table())
        out.push_back({cp, cls});
    auto add = [&](char32_t cp) { out.push_back({cp, JoiningClass::non_joining}); };
    for (char32_t cp = 0x21; cp <= 0x7E; ++cp)
        add(cp);
    for (char32_t cp = 0x064B; cp <= 0x0652; ++cp)
        add(cp);
    for (char32_t cp = 0x0660; cp <= 0x0669; ++cp)
        add(cp);
    for (char32_t cp = 0x06F0; cp <= 0x06F9; ++cp)
        add(cp);
    for (char32_t cp : {0x060C, 0x061B, 0x061F})
        add(cp);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.codepoint < b.codepoint; });
    return out;
}

inline GlyphAtlas builtin_atlas()
{
    return generate_test_font(builtin_alphabet());
}

inline constexpr std::uint16_t font_version = 1;

namespace detail {

inline void write_glyph(ByteWriter& w, const Glyph& g)
{
    w.u32(static_cast<std::uint32_t>(g.codepoint));
    w.u8(static_cast<std::uint8_t>(g.form));
    w.u8(g.width);
    w.u8(g.height);
    w.i8(g.x_bearing);
    w.i8(g.y_bearing);
    w.u8(g.advance);
    w.raw(g.bitmap);
}

} // namespace detail

/// Glyphs are written in (codepoint, form) order; the replacement glyph
/// sorts last.
inline Bytes encode_font(const GlyphAtlas& atlas)
{
    check_atlas(atlas);
    if (atlas.joining.size() > 0xFFFF || atlas.glyphs.size() + 1 > 0xFFFF)
        throw Error(Errc::invalid_argument, "atlas too large for the font format");
    ByteWriter w;
    w.raw("MCFN");
    w.u16(font_version);
    w.u8(atlas.line_height);
    w.u8(atlas.baseline);
    w.u8(atlas.space_width);
    w.u16(static_cast<std::uint16_t>(atlas.joining.size()));
    for (const auto& [cp, cls] : atlas.joining) {
        w.u32(static_cast<std::uint32_t>(cp));
        w.u8(static_cast<std::uint8_t>(cls));
    }
    w.u16(static_cast<std::uint16_t>(atlas.glyphs.size() + 1));
    for (const auto& [key, g] : atlas.glyphs)
        detail::write_glyph(w, g);
    detail::write_glyph(w, atlas.replacement);
    return std::move(w).bytes();
}

inline GlyphAtlas decode_font(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    if (bytes.size() < 4 || to_string(bytes.subspan(0, 4)) != "MCFN")
        throw Error(Errc::bad_magic, "font file does not start with MCFN");
    r.raw(4);
    auto version = r.u16();
    if (version != font_version)
        throw Error(Errc::unsupported_version, "font version " + std::to_string(version));
    GlyphAtlas atlas;
    atlas.line_height = r.u8();
    atlas.baseline = r.u8();
    atlas.space_width = r.u8();
    auto joining_count = r.u16();
    for (std::uint16_t i = 0; i < joining_count; ++i) {
        auto cp = static_cast<char32_t>(r.u32());
        auto cls = r.u8();
        if (cls > 2)
            throw Error(Errc::invalid_font, "joining entry " + std::to_string(i) + " has class " + std::to_string(cls));
        if (!atlas.joining.emplace(cp, static_cast<JoiningClass>(cls)).second)
            throw Error(Errc::invalid_font, "joining entry " + std::to_string(i) + " repeats a code point");
    }
    auto glyph_count = r.u16();
    bool have_replacement = false;
    for (std::uint16_t i = 0; i < glyph_count; ++i) {
        Glyph g;
        g.codepoint = static_cast<char32_t>(r.u32());
        auto form = r.u8();
        if (form > 3)
            throw Error(Errc::invalid_font, "glyph " + std::to_string(i) + " has form " + std::to_string(form));
        g.form = static_cast<GlyphForm>(form);
        g.width = r.u8();
        g.height = r.u8();
        g.x_bearing = r.i8();
        g.y_bearing = r.i8();
        g.advance = r.u8();
        auto need = g.expected_bitmap_size();
        if (r.remaining() < need)
            throw Error(Errc::bitmap_size_mismatch, "glyph " + std::to_string(i) + " needs " + std::to_string(need) +
                                                        " bitmap bytes but only " + std::to_string(r.remaining()) +
                                                        " remain");
        auto bm = r.raw(need);
        g.bitmap.assign(bm.begin(), bm.end());
        if (g.codepoint == replacement_codepoint) {
            if (g.form != GlyphForm::isolated || have_replacement)
                throw Error(Errc::invalid_font, "glyph " + std::to_string(i) + " is a second or non-isolated replacement");
            atlas.replacement = std::move(g);
            have_replacement = true;
        } else if (!atlas.glyphs.emplace(g.key(), g).second) {
            throw Error(Errc::invalid_font, "glyph " + std::to_string(i) + " repeats a (codepoint, form) pair");
        }
    }
    if (!have_replacement)
        throw Error(Errc::invalid_font, "font has no replacement glyph");
    if (!r.at_end())
        throw Error(Errc::invalid_font, std::to_string(r.remaining()) + " trailing bytes after the glyph table");
    check_atlas(atlas);
    return atlas;
}

} // namespace contentforge
