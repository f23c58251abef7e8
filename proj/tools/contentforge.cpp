#include <contentforge/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    namespace cli = contentforge::cli;

    CLI::App app{"contentforge: compile, package, render and preview content bundles"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "contentforge 1.0.0");

    std::string manifest, out_dir;
    auto* compile = app.add_subcommand("compile", "Validate a project manifest and write a bundle directory");
    compile->add_option("manifest", manifest, "Project manifest (JSON)")->required();
    compile->add_option("-o,--out", out_dir, "Output bundle directory")->required();

    std::string bundle_dir, template_path, archive_out;
    std::vector<std::string> path_map, meta;
    bool no_deterministic = false;
    auto* pack = app.add_subcommand("pack", "Inject a bundle into a template archive");
    pack->add_option("bundle", bundle_dir, "Bundle directory")->required();
    pack->add_option("--template", template_path, "Template ZIP archive")->required();
    pack->add_option("-o,--out", archive_out, "Output archive")->required();
    pack->add_option("--path-map", path_map, "Override an archive path: index|content|theme|font|assets|metadata=PATH");
    pack->add_option("--meta", meta, "Extra metadata entry KEY=VALUE");
    pack->add_flag("--no-deterministic", no_deterministic, "Keep current timestamps and deflate new entries");

    std::uint32_t page_id = 0;
    int width = 240;
    std::string ppm_out;
    auto* render = app.add_subcommand("render", "Render one page to a PPM image");
    render->add_option("bundle", bundle_dir, "Bundle directory")->required();
    render->add_option("--page", page_id, "Page id")->required();
    render->add_option("--width", width, "Image width in pixels")->capture_default_str();
    render->add_option("-o,--out", ppm_out, "Output PPM file")->required();

    std::string query;
    auto* search = app.add_subcommand("search", "Case-insensitive substring search over a bundle");
    search->add_option("bundle", bundle_dir, "Bundle directory")->required();
    search->add_option("query", query, "Search text")->required();

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "Describe a bundle directory or packed archive");
    inspect->add_option("path", inspect_path, "Bundle directory or archive")->required();

    int port = 8080, idle_minutes = 30;
    std::string static_dir;
    auto* serve = app.add_subcommand("serve", "Run the HTTP preview service");
    serve->add_option("bundle", bundle_dir, "Bundle directory")->required();
    serve->add_option("--port", port, "Listen port")->capture_default_str();
    serve->add_option("--idle-timeout", idle_minutes, "Session idle timeout in minutes")->capture_default_str();
    serve->add_option("--static-dir", static_dir, "Directory of viewer assets served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_invalid_input;
    }

    if (*compile)
        return cli::cmd_compile(manifest, out_dir, std::cout, std::cerr);
    if (*pack) {
        std::vector<std::pair<std::string, std::string>> extra;
        for (const auto& kv : meta) {
            auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                std::cerr << "pack: --meta expects KEY=VALUE, got \"" << kv << "\"\n";
                return cli::exit_invalid_input;
            }
            extra.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
        return cli::cmd_pack(bundle_dir, template_path, archive_out, path_map, extra, !no_deterministic, std::cout,
                             std::cerr);
    }
    if (*render)
        return cli::cmd_render(bundle_dir, page_id, width, ppm_out, std::cout, std::cerr);
    if (*search)
        return cli::cmd_search(bundle_dir, query, std::cout, std::cerr);
    if (*inspect)
        return cli::cmd_inspect(inspect_path, std::cout, std::cerr);
    if (*serve) {
        std::optional<std::filesystem::path> dir;
        if (!static_dir.empty())
            dir = static_dir;
        return cli::cmd_serve(bundle_dir, port, idle_minutes, dir, std::cout, std::cerr);
    }
    return cli::exit_invalid_input;
}
