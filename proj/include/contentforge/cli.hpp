#pragma once

// Implementation of the contentforge subcommands. Each returns a process
// exit status:
//   0 success, 1 I/O or unexpected failure, 2 invalid input or validation
//   findings, 3 packaging failure, 4 unknown page.

#include <contentforge/bundle.hpp>
#include <contentforge/bundle_codec.hpp>
#include <contentforge/content_model.hpp>
#include <contentforge/packager.hpp>
#include <contentforge/render.hpp>
#include <contentforge/search.hpp>
#include <contentforge/service.hpp>
#include <contentforge/text_shaper.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace contentforge::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_invalid_input = 2,
    exit_pack_failure = 3,
    exit_unknown_page = 4,
};

/// "line:column" of a byte offset, both 1-based.
inline std::string line_column(std::string_view text, std::size_t offset)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

/// Loads the atlas named by a manifest's font_source: "builtin" for the
/// built-in procedural atlas, a .json alphabet description, or an encoded
/// font.bin.
inline GlyphAtlas load_atlas(const std::string& source, const fs::path& base)
{
    if (source == "builtin")
        return builtin_atlas();
    auto path = base / source;
    if (!fs::is_regular_file(path))
        throw Error(Errc::io, "missing font source " + path.string());
    auto bytes = read_file(path.string());
    if (path.extension() != ".json")
        return decode_font(bytes);

    auto doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    std::vector<AlphabetEntry> alphabet;
    for (const auto& letter : doc.at("letters")) {
        auto cls = letter.value("class", std::string("non_joining"));
        JoiningClass jc = JoiningClass::non_joining;
        if (cls == "dual")
            jc = JoiningClass::dual;
        else if (cls == "right")
            jc = JoiningClass::right;
        else if (cls != "non_joining")
            throw Error(Errc::schema_violation, "unknown joining class \"" + cls + "\"");
        alphabet.push_back({static_cast<char32_t>(letter.at("codepoint").get<std::uint32_t>()), jc});
    }
    return generate_test_font(alphabet);
}

inline std::set<std::string> referenced_assets(const ProjectManifest& m)
{
    std::set<std::string> refs;
    for (const auto* ref : {&m.theme.splash_image, &m.theme.background_image, &m.theme.background_music})
        if (*ref)
            refs.insert(**ref);
    for (const auto& flat : flatten(m))
        for (const auto& item : flat.page->items)
            if (is_media(item.kind))
                refs.insert(item.body);
    return refs;
}

inline int cmd_compile(const fs::path& manifest_path, const fs::path& output_dir, std::ostream& out, std::ostream& err)
{
    std::string text;
    try {
        text = to_string(read_file(manifest_path.string()));
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_invalid_input;
    }

    ProjectManifest manifest;
    try {
        manifest = parse_manifest(text);
    } catch (const ParseError& e) {
        err << manifest_path.string() << ":" << line_column(text, e.position()) << ": " << e.what() << "\n";
        return exit_invalid_input;
    } catch (const Error& e) {
        err << manifest_path.string() << ": " << e.what() << "\n";
        return exit_invalid_input;
    }

    auto base = manifest_path.parent_path();
    auto asset_dir = base / manifest.asset_dir;
    auto findings = validate(manifest, asset_dir);
    if (!findings.empty()) {
        for (const auto& f : findings)
            err << manifest_path.string() << ": " << describe(f) << "\n";
        return exit_invalid_input;
    }

    GlyphAtlas atlas;
    try {
        atlas = load_atlas(manifest.font_source, base);
    } catch (const std::exception& e) {
        err << manifest_path.string() << ": font_source: " << e.what() << "\n";
        return exit_invalid_input;
    }
    for (const auto& gap : coverage_gaps(manifest, atlas))
        err << "warning: page " << gap.page_id << ": U+" << std::hex << std::uppercase << std::setw(4)
            << std::setfill('0') << static_cast<std::uint32_t>(gap.codepoint) << std::dec << std::nouppercase
            << " has no glyph; the replacement glyph will be drawn\n";

    try {
        AssetMap assets;
        for (const auto& ref : referenced_assets(manifest))
            assets[ref] = read_file((asset_dir / ref).string());
        auto files = encode_bundle(manifest, atlas, assets);
        fs::remove_all(output_dir / asset_dir_name);
        write_bundle_dir(files, output_dir);
        auto total = files.index_bytes.size() + files.content_bytes.size() + files.theme_bytes.size() +
                     files.font_bytes.size();
        out << "compiled " << page_count(manifest.roots) << " pages, " << assets.size() << " assets, " << total
            << " bundle bytes -> " << output_dir.string() << "\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == Errc::io ? exit_failure : exit_invalid_input;
    }
    return exit_ok;
}

struct PathMap {
    std::string index = "content/index.bin";
    std::string content = "content/content.bin";
    std::string theme = "content/theme.bin";
    std::string font = "content/font.bin";
    std::string assets = "content/assets/";
    std::string metadata = default_metadata_path;

    void set(const std::string& assignment)
    {
        auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::invalid_argument, "path map entry \"" + assignment + "\" is not key=value");
        auto key = assignment.substr(0, eq);
        auto value = assignment.substr(eq + 1);
        if (key == "index") index = value;
        else if (key == "content") content = value;
        else if (key == "theme") theme = value;
        else if (key == "font") font = value;
        else if (key == "assets") assets = value.empty() || value.back() == '/' ? value : value + "/";
        else if (key == "metadata") metadata = value;
        else throw Error(Errc::invalid_argument, "unknown path map key \"" + key + "\"");
    }
};

using MetadataPairs = std::vector<std::pair<std::string, std::string>>;

inline InjectionPlan make_pack_plan(const BundleFiles& files, Bytes template_archive, const PathMap& paths,
                                    const MetadataPairs& extra_metadata, bool deterministic)
{
    InjectionPlan plan;
    plan.template_archive = std::move(template_archive);
    plan.deterministic = deterministic;
    plan.metadata_path = paths.metadata;
    plan.placements.push_back({paths.index, files.index_bytes});
    plan.placements.push_back({paths.content, files.content_bytes});
    plan.placements.push_back({paths.theme, files.theme_bytes});
    plan.placements.push_back({paths.font, files.font_bytes});
    for (const auto& [ref, data] : files.assets)
        plan.placements.push_back({paths.assets + ref, data});
    auto index = decode_index(files.index_bytes);
    plan.metadata_updates = {
        {"Bundle-Format-Version", std::to_string(bundle_version)},
        {"Bundle-Pages", std::to_string(index.entries.size())},
        {"Bundle-Index", paths.index},
        {"Bundle-Content", paths.content},
        {"Bundle-Theme", paths.theme},
        {"Bundle-Font", paths.font},
        {"Bundle-Assets", paths.assets},
    };
    plan.metadata_updates.insert(plan.metadata_updates.end(), extra_metadata.begin(), extra_metadata.end());
    return plan;
}

inline int cmd_pack(const fs::path& bundle_dir, const fs::path& template_path, const fs::path& output_path,
                    const std::vector<std::string>& path_map, const MetadataPairs& extra_metadata, bool deterministic,
                    std::ostream& out, std::ostream& err)
{
    try {
        PathMap paths;
        for (const auto& kv : path_map)
            paths.set(kv);
        auto files = read_bundle_dir(bundle_dir);
        auto report = verify_bundle(files);
        if (!report.empty()) {
            for (const auto& f : report)
                err << "bundle: " << describe(f) << "\n";
            return exit_pack_failure;
        }
        auto plan = make_pack_plan(files, read_file(template_path.string()), paths, extra_metadata, deterministic);
        auto archive = inject(plan);
        write_file(output_path.string(), archive);
        for (const auto& e : list_entries(archive))
            out << std::setw(10) << e.uncompressed_size << "  " << std::hex << std::setw(8) << std::setfill('0')
                << e.crc32 << std::dec << std::setfill(' ') << "  "
                << (e.method == ArchiveMethod::stored ? "stored " : "deflate") << "  " << e.path << "\n";
    } catch (const std::exception& e) {
        err << "pack: " << e.what() << "\n";
        return exit_pack_failure;
    }
    return exit_ok;
}

inline int cmd_render(const fs::path& bundle_dir, std::uint32_t page_id, int width, const fs::path& out_path,
                      std::ostream& out, std::ostream& err)
{
    try {
        auto bundle = open_bundle_dir(bundle_dir);
        auto img = render_page(*bundle, page_id, width);
        write_file(out_path.string(), to_ppm(img));
        out << "wrote " << img.width << "x" << img.height << " " << out_path.string() << "\n";
    } catch (const Error& e) {
        err << "render: " << e.what() << "\n";
        if (e.code() == Errc::unknown_page)
            return exit_unknown_page;
        return e.code() == Errc::invalid_argument ? exit_invalid_input : exit_failure;
    }
    return exit_ok;
}

inline std::string single_line(std::string s)
{
    for (auto& c : s)
        if (c == '\t' || c == '\n' || c == '\r')
            c = ' ';
    return s;
}

inline int cmd_search(const fs::path& bundle_dir, const std::string& query, std::ostream& out, std::ostream& err)
{
    if (fold(utf8::decode(query), FoldMode::simple_case).empty()) {
        err << "search: query is empty\n";
        return exit_invalid_input;
    }
    try {
        auto bundle = open_bundle_dir(bundle_dir);
        for (const auto& m : search_content(*bundle, query))
            out << m.page_id << "\t" << (m.item_index ? std::to_string(*m.item_index) : std::string("-")) << "\t"
                << m.char_offset << "\t" << single_line(m.snippet) << "\n";
    } catch (const Error& e) {
        err << "search: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_ok;
}

inline void print_bundle(const BundleFiles& files, std::ostream& out)
{
    auto index = decode_index(files.index_bytes);
    auto theme = decode_theme(files.theme_bytes);
    auto atlas = decode_font(files.font_bytes);
    out << "pages: " << index.entries.size() << "\n";
    std::map<std::uint32_t, int> depth;
    for (const auto& e : index.entries) {
        int d = e.parent_id == root_parent ? 0 : depth[e.parent_id] + 1;
        depth[e.page_id] = d;
        out << std::string(static_cast<std::size_t>(2 + 2 * d), ' ') << "[" << e.page_id << "] " << e.title
            << "  (offset " << e.content_offset << ", " << e.content_length << " bytes)\n";
    }
    out << "theme: background " << to_hex(theme.background) << ", text " << to_hex(theme.text) << ", palette "
        << theme.palette.size() << ", splash " << (theme.splash_enabled ? "on" : "off") << "\n";
    out << "font: " << atlas.glyphs.size() + 1 << " glyphs, " << atlas.joining.size() << " joining entries, line height "
        << int(atlas.line_height) << "\n";
    out << "assets: " << files.assets.size() << "\n";
}

inline int cmd_inspect(const fs::path& path, std::ostream& out, std::ostream& err)
{
    try {
        BundleFiles files;
        if (fs::is_directory(path)) {
            files = read_bundle_dir(path);
        } else {
            auto archive = read_file(path.string());
            auto entries = list_entries(archive);
            out << "archive entries: " << entries.size() << "\n";
            for (const auto& e : entries)
                out << "  " << e.path << "  " << e.uncompressed_size << " bytes  crc " << std::hex << std::setw(8)
                    << std::setfill('0') << e.crc32 << std::dec << std::setfill(' ') << "\n";
            auto contents = extract(archive);
            PathMap paths;
            auto md_it = contents.find(paths.metadata);
            if (md_it != contents.end()) {
                auto md = Metadata::parse(to_string(md_it->second));
                paths.index = md.get("Bundle-Index").value_or(paths.index);
                paths.content = md.get("Bundle-Content").value_or(paths.content);
                paths.theme = md.get("Bundle-Theme").value_or(paths.theme);
                paths.font = md.get("Bundle-Font").value_or(paths.font);
                paths.assets = md.get("Bundle-Assets").value_or(paths.assets);
            }
            if (!contents.contains(paths.index)) {
                out << "no bundle found in archive\n";
                return exit_ok;
            }
            files.index_bytes = contents[paths.index];
            files.content_bytes = contents[paths.content];
            files.theme_bytes = contents[paths.theme];
            files.font_bytes = contents[paths.font];
            for (const auto& [p, data] : contents)
                if (p.starts_with(paths.assets))
                    files.assets[p.substr(paths.assets.size())] = data;
        }
        auto report = verify_bundle(files);
        for (const auto& f : report)
            out << "finding: " << describe(f) << "\n";
        if (report.empty())
            print_bundle(files, out);
        return report.empty() ? exit_ok : exit_invalid_input;
    } catch (const std::exception& e) {
        err << "inspect: " << e.what() << "\n";
        return exit_failure;
    }
}

inline int cmd_serve(const fs::path& bundle_dir, int port, int idle_timeout_minutes,
                     const std::optional<fs::path>& static_dir, std::ostream& out, std::ostream& err)
{
    std::shared_ptr<const Bundle> bundle;
    try {
        auto report = verify_bundle(read_bundle_dir(bundle_dir));
        if (!report.empty()) {
            for (const auto& f : report)
                err << "bundle: " << describe(f) << "\n";
            return exit_invalid_input;
        }
        bundle = open_bundle_dir(bundle_dir);
    } catch (const std::exception& e) {
        err << "serve: " << e.what() << "\n";
        return exit_invalid_input;
    }
    PreviewService::Options options;
    options.idle_timeout = std::chrono::minutes(idle_timeout_minutes);
    options.static_dir = static_dir;
    PreviewService service(bundle, options);
    httplib::Server server;
    service.mount(server);
    if (!server.bind_to_port("0.0.0.0", port)) {
        err << "serve: cannot bind port " << port << "\n";
        return exit_failure;
    }
    out << "serving " << bundle_dir.string() << " on http://localhost:" << port << "/\n" << std::flush;
    server.listen_after_bind();
    return exit_ok;
}

} // namespace contentforge::cli
