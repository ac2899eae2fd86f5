// Command-line front end: scene generation, fitting, relighting, texture
// swap evaluation, standalone metrics and the gradient audit.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lumisplit/config.hpp"
#include "lumisplit/io.hpp"
#include "lumisplit/metrics.hpp"
#include "lumisplit/pipeline.hpp"
#include "lumisplit/synth.hpp"

using namespace lumisplit;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

int fail(int code, const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"albedo/lighting decoupling toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a ground-truthed synthetic scene");
    std::string gen_out;
    uint64_t gen_seed = 1;
    int gen_frames = 1, gen_regions = 1, gen_size = 128, gen_csh = 9;
    double gen_minfrac = 0.02;
    std::string gen_occ = "none";
    gen->add_option("--out", gen_out, "output scene directory")->required();
    gen->add_option("--seed", gen_seed, "scene seed");
    gen->add_option("--frames", gen_frames, "frame count");
    gen->add_option("--regions", gen_regions, "light region count (1-3)");
    gen->add_option("--occluder", gen_occ, "none|shadow|sprite|both");
    gen->add_option("--size", gen_size, "image size (square)");
    gen->add_option("--csh", gen_csh, "SH coefficients per channel");
    gen->add_option("--min-region-frac", gen_minfrac, "minimum frame fraction per light region");

    // fit
    auto* fitc = app.add_subcommand("fit", "fit texture, lights and masks to a scene");
    std::string fit_scene, fit_config, fit_out;
    fitc->add_option("--scene", fit_scene, "scene directory")->required();
    fitc->add_option("--config", fit_config, "key=value config file")->required();
    fitc->add_option("--out", fit_out, "output fit directory")->required();

    // relight
    auto* rel = app.add_subcommand("relight", "re-render a fit under substitute lights");
    std::string rel_fit, rel_lights, rel_out;
    int rel_frame = 0;
    rel->add_option("--fit", rel_fit, "fit directory")->required();
    rel->add_option("--lights", rel_lights, "lights JSON (coeffs, c_sh)")->required();
    rel->add_option("--out", rel_out, "output PNG")->required();
    rel->add_option("--frame", rel_frame, "frame index");

    // swap-eval
    auto* swp = app.add_subcommand("swap-eval", "re-render the target with the source texture");
    std::string swp_src, swp_tgt, swp_out;
    swp->add_option("--fit-src", swp_src, "source fit directory")->required();
    swp->add_option("--fit-tgt", swp_tgt, "target fit directory")->required();
    swp->add_option("--out", swp_out, "output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM between two images");
    std::string ev_pred, ev_gt;
    ev->add_option("--pred", ev_pred, "predicted image (png/flr)")->required();
    ev->add_option("--gt", ev_gt, "reference image (png/flr)")->required();

    // gradcheck
    app.add_subcommand("gradcheck", "finite-difference audit of all gradients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            SceneSpec sp;
            sp.k = gen_frames;
            sp.n_regions = gen_regions;
            sp.occluder = occluder_from_name(gen_occ);
            sp.image_size = gen_size;
            sp.c_sh = gen_csh;
            sp.min_region_frac = gen_minfrac;
            SceneBundle sc = gen_scene(gen_seed, sp);
            save_scene(gen_out, sc);
            std::cout << "scene written to " << gen_out << "\n";
        } else if (fitc->parsed()) {
            SceneBundle sc = load_scene(fit_scene);
            FitConfig cfg = load_config(fit_config);
            FitResult r = fit(sc, cfg);
            save_fit(fit_out, r);
            std::cout << r.metrics.to_json() << "\n";
        } else if (rel->parsed()) {
            FitResult r = load_fit(rel_fit);
            nlohmann::json lj = nlohmann::json::parse(io::read_text_file(rel_lights));
            LightSet ls = r.lights;
            auto coeffs = lj["coeffs"].get<std::vector<std::vector<double>>>();
            if (static_cast<int>(coeffs.size()) != ls.n ||
                (lj.contains("c_sh") && lj["c_sh"].get<int>() != ls.c_sh))
                throw std::invalid_argument("lights file must carry " + std::to_string(ls.n) +
                                            " blocks of 3*" + std::to_string(ls.c_sh) +
                                            " coefficients");
            ls.coeffs = coeffs;
            Image out = render_fit_frame(r, rel_frame, nullptr, &ls);
            io::write_png(rel_out, out);
            std::cout << "relit frame written to " << rel_out << "\n";
        } else if (swp->parsed()) {
            FitResult src = load_fit(swp_src);
            FitResult tgt = load_fit(swp_tgt);
            Image synth = swap_synthesize(src, tgt, 0);
            fs::create_directories(swp_out);
            io::write_png((fs::path(swp_out) / "synthesized.png").string(), synth);
            io::write_flr((fs::path(swp_out) / "synthesized.flr").string(), synth);
            MetricsReport m;
            m.psnr_db = psnr(synth, tgt.frames[0]);
            m.ssim = ssim(synth, tgt.frames[0]);
            m.n_l = tgt.lights.n_alive();
            io::write_text_file((fs::path(swp_out) / "metrics.json").string(), m.to_json());
            std::cout << m.to_json() << "\n";
        } else if (ev->parsed()) {
            Image pred = io::read_image(ev_pred);
            Image gt = io::read_image(ev_gt);
            MetricsReport m;
            m.psnr_db = psnr(pred, gt);
            m.ssim = ssim(pred, gt);
            std::cout << m.to_json() << "\n";
        } else {  // gradcheck
            std::string report;
            bool ok = gradient_check(&report);
            std::cout << report;
            if (!ok) return fail(kExitNumerical, "gradient audit failed");
            std::cout << "all gradients match finite differences\n";
        }
    } catch (const std::ios_base::failure& e) {
        return fail(kExitIo, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kExitUsage, e.what());
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        // file-system problems surface as runtime errors from the I/O layer
        if (what.find("open") != std::string::npos || what.find("read") != std::string::npos ||
            what.find("write") != std::string::npos || what.find("file") != std::string::npos)
            return fail(kExitIo, what);
        return fail(kExitNumerical, what);
    } catch (const std::exception& e) {
        return fail(kExitNumerical, e.what());
    }
    return 0;
}
