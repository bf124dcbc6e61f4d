// pano: command-line pipeline for layout-conditioned 360-degree scene
// geometry. Subcommands convert layouts to coarse ERP depth, fuse
// multi-view depth estimates, evaluate depth maps, and export 3D scenes.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pano/errors.hpp"
#include "pano/integrate.hpp"
#include "pano/io.hpp"
#include "pano/layout.hpp"
#include "pano/metrics.hpp"
#include "pano/scene_export.hpp"
#include "pano/sphere.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "pano 1.0.0";
constexpr double kDeg = std::numbers::pi / 180.0;

constexpr int kExitOk = 0;
constexpr int kExitContract = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct ManifestWriter {
  json doc;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  ManifestWriter(const std::string& command) {
    doc["tool"] = kVersion;
    doc["command"] = command;
    doc["inputs"] = json::object();
    doc["outputs"] = json::array();
    doc["config"] = json::object();
  }
  void input(const std::string& key, const std::string& path) {
    doc["inputs"][key] = path;
  }
  void output(const std::string& path) { doc["outputs"].push_back(path); }
  void write(const std::string& path) {
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    doc["wall_clock_seconds"] = elapsed;
    std::ofstream out(path);
    if (!out) throw pano::IoError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
  }
};

pano::ErpGrid parse_erp_size(const std::string& spec) {
  const auto x = spec.find('x');
  if (x == std::string::npos)
    throw pano::ContractError("--erp: expected HxW, e.g. 512x1024");
  try {
    return pano::ErpGrid(std::stoi(spec.substr(0, x)),
                         std::stoi(spec.substr(x + 1)));
  } catch (const std::logic_error&) {
    throw pano::ContractError("--erp: expected HxW, e.g. 512x1024");
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pano::IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

pano::IntegrationConfig load_config(const std::string& path) {
  pano::IntegrationConfig cfg;
  if (path.empty()) return cfg;
  const json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded())
    throw pano::ContractError("config: malformed JSON in '" + path + "'");
  cfg.eta_low = doc.value("eta_low", cfg.eta_low);
  cfg.eta_high = doc.value("eta_high", cfg.eta_high);
  cfg.alpha = doc.value("alpha", cfg.alpha);
  cfg.epsilon = doc.value("epsilon", cfg.epsilon);
  cfg.ridge = doc.value("ridge", cfg.ridge);
  if (cfg.eta_low < 0 || cfg.eta_high < cfg.eta_low || cfg.alpha <= 0 ||
      cfg.epsilon <= 0 || cfg.ridge < 0)
    throw pano::ContractError("config: constraint violated (want 0 <= eta_low "
                              "<= eta_high, alpha > 0, epsilon > 0, ridge >= 0)");
  return cfg;
}

pano::CameraSpec parse_camera_json(const json& j) {
  return pano::CameraSpec(j.value("yaw_deg", 0.0) * kDeg,
                          j.value("pitch_deg", 0.0) * kDeg,
                          j.value("roll_deg", 0.0) * kDeg,
                          j.value("hfov_deg", 90.0) * kDeg,
                          j.value("width", 512), j.value("height", 512));
}

int cmd_convert_layout(const std::string& layout_path,
                       const std::string& erp_spec,
                       const std::string& out_dir,
                       const std::string& config_path) {
  ManifestWriter manifest("convert-layout");
  manifest.input("layout", layout_path);
  const pano::ErpGrid grid = parse_erp_size(erp_spec);
  const pano::IntegrationConfig cfg = load_config(config_path);
  manifest.doc["config"]["erp"] = erp_spec;

  const std::string base_dir = fs::path(layout_path).parent_path().string();
  const pano::Layout layout =
      pano::parse_layout(read_text_file(layout_path),
                         base_dir.empty() ? "." : base_dir);
  fs::create_directories(out_dir);
  auto out = [&](const std::string& name) {
    manifest.output(name);
    return (fs::path(out_dir) / name).string();
  };

  const pano::ObserverSpec& observer = std::holds_alternative<pano::FloorPlan>(layout)
      ? std::get<pano::FloorPlan>(layout).observer
      : std::get<pano::TerrainMap>(layout).observer;

  pano::Mask partial_mask(grid.height, grid.width, 0.0f);
  if (observer.partial_image) {
    const auto img_path =
        fs::path(base_dir.empty() ? "." : base_dir) / *observer.partial_image;
    const pano::RgbImage img = pano::read_png(img_path.string());
    auto [erp_rgb, mask] = pano::perspective_to_erp(img, observer.camera, grid);
    pano::write_png(erp_rgb, out("partial.png"));
    pano::ByteMap mask8(grid.height, grid.width);
    for (std::size_t p = 0; p < mask.size(); ++p)
      mask8[p] = mask[p] > 0 ? 255 : 0;
    pano::write_png_gray(mask8, out("mask.png"));
    partial_mask = std::move(mask);
  }

  if (const auto* fp = std::get_if<pano::FloorPlan>(&layout)) {
    const pano::DepthMap depth = pano::floorplan_coarse_depth(*fp, grid);
    pano::write_pfm(depth, out("coarse_depth.pfm"));
    const pano::SemanticMap sem = pano::floorplan_semantic_map(*fp, grid);
    pano::write_semantic(sem, (fs::path(out_dir) / "semantic").string());
    manifest.output("semantic_legend.json");
    if (!sem.channels.empty()) manifest.output("semantic_index.png");
    for (std::size_t c = 0; c < sem.channels.size(); ++c)
      manifest.output("semantic_ch" + std::to_string(c) + ".png");
    const pano::WeightMap w =
        pano::coarse_weight_floorplan(partial_mask, sem, cfg, grid);
    pano::write_pfm(w, out("coarse_weight.pfm"));
  } else {
    const auto& tm = std::get<pano::TerrainMap>(layout);
    const pano::DepthMap depth = pano::terrain_coarse_depth(tm, grid);
    pano::write_pfm(depth, out("coarse_depth.pfm"));
    pano::write_pfm(pano::coarse_weight_terrain(depth, cfg),
                    out("coarse_weight.pfm"));
  }
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  return kExitOk;
}

std::vector<pano::ViewEstimate> load_views(const std::string& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("view_") && name.ends_with(".pfm"))
      names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  if (names.empty())
    throw pano::ContractError("--views: no view_*.pfm files in '" + dir + "'");
  std::vector<pano::ViewEstimate> views;
  for (const auto& name : names) {
    const std::string weight_name = "weight_" + name.substr(5);
    const fs::path weight_path = fs::path(dir) / weight_name;
    if (!fs::exists(weight_path))
      throw pano::ContractError("--views: missing companion '" + weight_name +
                                "' for '" + name + "'");
    views.push_back(pano::ViewEstimate{
        .estimate = pano::read_pfm((fs::path(dir) / name).string()),
        .weight = pano::read_pfm(weight_path.string()),
    });
  }
  return views;
}

int cmd_integrate(const std::string& coarse_path, const std::string& weight_path,
                  const std::string& views_dir, const std::string& out_path,
                  const std::string& report_path,
                  const std::string& config_path) {
  ManifestWriter manifest("integrate");
  manifest.input("coarse", coarse_path);
  manifest.input("coarse_weight", weight_path);
  manifest.input("views", views_dir);
  const pano::IntegrationConfig cfg = load_config(config_path);
  const pano::DepthMap d0 = pano::read_pfm(coarse_path);
  const pano::WeightMap phi0 = pano::read_pfm(weight_path);
  const auto views = load_views(views_dir);
  const pano::IntegrationResult res = pano::integrate(d0, phi0, views, cfg);
  pano::write_pfm(res.fused, out_path);
  manifest.output(out_path);

  json report;
  report["loss"] = res.loss;
  report["views"] = views.size();
  report["coeffs"] = json::array();
  for (const auto& c : res.coeffs)
    report["coeffs"].push_back({{"scale", c.scale}, {"offset", c.offset}});
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw pano::IoError("cannot open '" + report_path + "'");
    out << report.dump(2) << "\n";
    manifest.output(report_path);
  }
  manifest.write(out_path + ".manifest.json");
  return kExitOk;
}

int cmd_evaluate(const std::string& est_path, const std::string& gt_path,
                 const std::string& report_path) {
  const pano::DepthMap est = pano::read_pfm(est_path);
  const pano::DepthMap gt = pano::read_pfm(gt_path);
  const pano::EvalReport r = pano::evaluate_depth(est, gt);
  json report{{"rmse", r.rmse},
              {"absrel", r.absrel},
              {"scale", r.aligned_scale},
              {"offset", r.aligned_offset},
              {"valid_pixels", r.valid_pixel_count}};
  if (report_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream out(report_path);
    if (!out) throw pano::IoError("cannot open '" + report_path + "'");
    out << report.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_export(const std::string& rgb_path, const std::string& depth_path,
               const std::string& ply_path, const std::string& render_cam,
               const std::string& translate_spec,
               const std::string& render_dir) {
  ManifestWriter manifest("export");
  manifest.input("rgb", rgb_path);
  manifest.input("depth", depth_path);
  const pano::RgbImage rgb = pano::read_png(rgb_path);
  const pano::DepthMap depth = pano::read_pfm(depth_path);
  if (!rgb.same_shape(depth))
    throw pano::ContractError("export: RGB and depth dimensions differ");
  const pano::ErpGrid grid(depth.height(), depth.width());
  const pano::PointCloud pc = pano::unproject(rgb, depth, grid);
  pano::write_ply(pc, ply_path);
  manifest.output(ply_path);

  if (!render_cam.empty()) {
    const json cam_doc = json::parse(read_text_file(render_cam));
    const pano::CameraSpec cam = parse_camera_json(cam_doc);
    pano::Vec3 t{0, 0, 0};
    if (!translate_spec.empty()) {
      std::istringstream ss(translate_spec);
      char c1 = 0, c2 = 0;
      if (!(ss >> t.x >> c1 >> t.y >> c2 >> t.z) || c1 != ',' || c2 != ',')
        throw pano::ContractError("--translate: expected x,y,z");
    }
    const pano::RenderResult r =
        pano::render_translated(rgb, depth, grid, cam, t);
    const fs::path dir = render_dir.empty() ? fs::path(ply_path).parent_path()
                                            : fs::path(render_dir);
    fs::create_directories(dir.empty() ? "." : dir);
    pano::write_png(r.image, (dir / "render.png").string());
    pano::write_pfm(r.depth, (dir / "render_depth.pfm").string());
    pano::write_png_gray(r.holes, (dir / "render_holes.png").string());
    manifest.output((dir / "render.png").string());
  }
  manifest.write(ply_path + ".manifest.json");
  return kExitOk;
}

int cmd_synth_terrain(const std::string& gmm_path, const std::string& out_path) {
  const pano::GmmSpec spec = pano::parse_gmm_spec(read_text_file(gmm_path));
  const pano::TerrainMap tm = pano::synth_terrain_gmm(spec);
  pano::write_pfm(tm.heights, out_path);
  return kExitOk;
}

int cmd_tangent_views(const std::string& erp_path, const std::string& out_dir) {
  ManifestWriter manifest("tangent-views");
  manifest.input("erp", erp_path);
  const pano::RgbImage erp = pano::read_png(erp_path);
  const pano::ErpGrid grid(erp.height(), erp.width());
  const auto rig = pano::tangent_rig();
  const auto weights = pano::erp_view_weights(rig, grid);
  fs::create_directories(out_dir);
  for (std::size_t n = 0; n < rig.size(); ++n) {
    char suffix[8];
    std::snprintf(suffix, sizeof(suffix), "%02zu", n + 1);
    const std::string view_name = std::string("view_") + suffix + ".png";
    const std::string weight_name = std::string("weight_") + suffix + ".pfm";
    pano::write_png(pano::erp_to_perspective(erp, rig[n]),
                    (fs::path(out_dir) / view_name).string());
    pano::write_pfm(weights[n], (fs::path(out_dir) / weight_name).string());
    manifest.output(view_name);
    manifest.output(weight_name);
  }
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"360-degree scene geometry toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string layout_path, erp_spec = "512x1024", out_dir, config_path;
  auto* convert = app.add_subcommand(
      "convert-layout", "Rasterize a layout into coarse ERP depth maps");
  convert->add_option("--layout", layout_path, "Layout JSON")->required();
  convert->add_option("--erp", erp_spec, "ERP size as HxW");
  convert->add_option("--out-dir", out_dir, "Output directory")->required();
  convert->add_option("--config", config_path, "Integration config JSON");

  std::string coarse_path, weight_path, views_dir, out_path, report_path;
  auto* integrate = app.add_subcommand(
      "integrate", "Fuse view depth estimates with the coarse depth");
  integrate->add_option("--coarse", coarse_path, "Coarse depth PFM")->required();
  integrate->add_option("--coarse-weight", weight_path, "Coarse weight PFM")
      ->required();
  integrate->add_option("--views", views_dir,
                        "Directory of view_*.pfm / weight_*.pfm pairs")
      ->required();
  integrate->add_option("--out", out_path, "Fused depth PFM")->required();
  integrate->add_option("--report", report_path, "Report JSON");
  integrate->add_option("--config", config_path, "Integration config JSON");

  std::string est_path, gt_path;
  auto* evaluate = app.add_subcommand("evaluate",
                                      "Depth metrics with affine alignment");
  evaluate->add_option("--est", est_path, "Estimated depth PFM")->required();
  evaluate->add_option("--gt", gt_path, "Ground-truth depth PFM")->required();
  evaluate->add_option("--report", report_path, "Report JSON (stdout if absent)");

  std::string rgb_path, depth_path, ply_path, render_cam, translate_spec,
      render_dir;
  auto* exp = app.add_subcommand("export",
                                 "Point cloud and perspective renders");
  exp->add_option("--rgb", rgb_path, "ERP RGB PNG")->required();
  exp->add_option("--depth", depth_path, "ERP depth PFM")->required();
  exp->add_option("--ply", ply_path, "Output PLY")->required();
  exp->add_option("--render", render_cam, "Render camera JSON");
  exp->add_option("--translate", translate_spec, "Camera translation x,y,z");
  exp->add_option("--render-out", render_dir, "Render output directory");

  std::string gmm_path;
  auto* synth = app.add_subcommand("synth-terrain",
                                   "Heightfield from a Gaussian mixture");
  synth->add_option("--gmm", gmm_path, "GMM spec JSON")->required();
  synth->add_option("--out", out_path, "Output heightfield PFM")->required();

  std::string erp_png;
  auto* tangent = app.add_subcommand(
      "tangent-views", "Extract the 16-view tangent rig from a panorama");
  tangent->add_option("--erp", erp_png, "ERP RGB PNG")->required();
  tangent->add_option("--out-dir", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
    if (convert->parsed())
      return cmd_convert_layout(layout_path, erp_spec, out_dir, config_path);
    if (integrate->parsed())
      return cmd_integrate(coarse_path, weight_path, views_dir, out_path,
                           report_path, config_path);
    if (evaluate->parsed()) return cmd_evaluate(est_path, gt_path, report_path);
    if (exp->parsed())
      return cmd_export(rgb_path, depth_path, ply_path, render_cam,
                        translate_spec, render_dir);
    if (synth->parsed()) return cmd_synth_terrain(gmm_path, out_path);
    if (tangent->parsed()) return cmd_tangent_views(erp_png, out_dir);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitContract;
  } catch (const pano::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const pano::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const pano::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitOk;
}
