#pragma once

#include <contentforge/text_shaper.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cf_test {

using namespace contentforge;

struct FormCase {
    std::optional<JoiningClass> prev;
    JoiningClass self;
    std::optional<JoiningClass> next;
    GlyphForm form;
};

// Exhaustive (prev, this, next) table, filled in by hand.
inline const std::vector<FormCase>& form_truth_table()
{
    constexpr auto D = JoiningClass::dual;
    constexpr auto R = JoiningClass::right;
    constexpr auto N = JoiningClass::non_joining;
    constexpr auto Iso = GlyphForm::isolated;
    constexpr auto Ini = GlyphForm::initial;
    constexpr auto Med = GlyphForm::medial;
    constexpr auto Fin = GlyphForm::final;
    constexpr std::optional<JoiningClass> none;
    static const std::vector<FormCase> t = {
        // this = Dual
        {none, D, none, Iso}, {none, D, D, Ini}, {none, D, R, Ini}, {none, D, N, Iso},
        {D, D, none, Fin},    {D, D, D, Med},    {D, D, R, Med},    {D, D, N, Fin},
        {R, D, none, Iso},    {R, D, D, Ini},    {R, D, R, Ini},    {R, D, N, Iso},
        {N, D, none, Iso},    {N, D, D, Ini},    {N, D, R, Ini},    {N, D, N, Iso},
        // this = Right
        {none, R, none, Iso}, {none, R, D, Iso}, {none, R, R, Iso}, {none, R, N, Iso},
        {D, R, none, Fin},    {D, R, D, Fin},    {D, R, R, Fin},    {D, R, N, Fin},
        {R, R, none, Iso},    {R, R, D, Iso},    {R, R, R, Iso},    {R, R, N, Iso},
        {N, R, none, Iso},    {N, R, D, Iso},    {N, R, R, Iso},    {N, R, N, Iso},
        // this = NonJoining
        {none, N, none, Iso}, {none, N, D, Iso}, {none, N, R, Iso}, {none, N, N, Iso},
        {D, N, none, Iso},    {D, N, D, Iso},    {D, N, R, Iso},    {D, N, N, Iso},
        {R, N, none, Iso},    {R, N, D, Iso},    {R, N, R, Iso},    {R, N, N, Iso},
        {N, N, none, Iso},    {N, N, D, Iso},    {N, N, R, Iso},    {N, N, N, Iso},
    };
    return t;
}

/// Six-letter alphabet for exhaustive word checks: two letters of each
/// joining class.
inline std::vector<AlphabetEntry> six_letter_alphabet()
{
    return {{0x0628, JoiningClass::dual},  {0x062A, JoiningClass::dual},        {0x0627, JoiningClass::right},
            {0x062F, JoiningClass::right}, {0x0621, JoiningClass::non_joining}, {0x0674, JoiningClass::non_joining}};
}

/// Form of each letter of a word, decided letter by letter: a letter links
/// to the previous one when that one is dual and itself joins, and to the
/// next one when it is dual and the next one joins.
inline std::vector<GlyphForm> per_letter_forms(const std::vector<JoiningClass>& word)
{
    std::vector<GlyphForm> out;
    for (std::size_t i = 0; i < word.size(); ++i) {
        bool joins = word[i] != JoiningClass::non_joining;
        bool back = joins && i > 0 && word[i - 1] == JoiningClass::dual;
        bool fwd = word[i] == JoiningClass::dual && i + 1 < word.size() && word[i + 1] != JoiningClass::non_joining;
        out.push_back(back && fwd ? GlyphForm::medial
                      : back      ? GlyphForm::final
                      : fwd       ? GlyphForm::initial
                                  : GlyphForm::isolated);
    }
    return out;
}

/// Every word of length 1..max_len over the alphabet, shaped and compared
/// with the per-letter oracle. Returns the number of words checked and the
/// first mismatching word, if any.
inline std::pair<std::size_t, std::optional<std::u32string>> check_all_words(std::size_t max_len)
{
    auto alphabet = six_letter_alphabet();
    auto atlas = generate_test_font(alphabet);
    std::size_t checked = 0;
    std::vector<std::size_t> digits;
    for (std::size_t len = 1; len <= max_len; ++len) {
        digits.assign(len, 0);
        while (true) {
            std::u32string word;
            std::vector<JoiningClass> classes;
            for (auto d : digits) {
                word.push_back(alphabet[d].codepoint);
                classes.push_back(alphabet[d].joining);
            }
            auto layout = shape_text(atlas, utf8::encode(word), unbounded_width, Rgb{});
            auto expected = per_letter_forms(classes);
            bool ok = layout.lines.size() == 1 && layout.lines[0].size() == word.size();
            for (std::size_t i = 0; ok && i < word.size(); ++i)
                ok = layout.lines[0][i].glyph == GlyphKey{word[i], expected[i]};
            ++checked;
            if (!ok)
                return {checked, word};
            std::size_t k = 0;
            while (k < len && ++digits[k] == alphabet.size())
                digits[k++] = 0;
            if (k == len)
                break;
        }
    }
    return {checked, std::nullopt};
}

} // namespace cf_test
