// Copyright 2026 The xviewcorr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "xvc/errors.hpp"
#include "xvc/image.hpp"
#include "xvc/mask.hpp"
#include "xvc/random.hpp"

namespace xvc {

enum class Direction { Ego2Exo, Exo2Ego };
enum class View { Ego = 0, Exo = 1 };

inline std::string to_string(Direction d) { return d == Direction::Ego2Exo ? "ego2exo" : "exo2ego"; }
inline std::string to_string(View v) { return v == View::Ego ? "ego" : "exo"; }

inline Direction parse_direction(const std::string& s) {
  if (s == "ego2exo") return Direction::Ego2Exo;
  if (s == "exo2ego") return Direction::Exo2Ego;
  throw SchemaError("unknown direction '" + s + "'");
}

inline View query_view(Direction d) { return d == Direction::Ego2Exo ? View::Ego : View::Exo; }
inline View target_view(Direction d) { return d == Direction::Ego2Exo ? View::Exo : View::Ego; }

// ---------------------------------------------------------------------------
// Category vocabulary and scenario presets

inline constexpr int kNumCategories = 32;

struct Rgb {
  float r = 0, g = 0, b = 0;
};

enum class ShapeKind { Ellipse, Polygon };

struct Category {
  const char* name;
  Rgb color;
  bool striped;
  ShapeKind shape;
};

namespace detail {

inline Rgb hsv(double h_deg, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h_deg / 60.0, 6.0);
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

inline std::array<Category, kNumCategories> make_categories() {
  static constexpr std::array<const char*, kNumCategories> names = {
      "piano", "knife",  "basketball", "wrench", "bowl",  "guitar", "bottle",    "cup",
      "pan",   "spoon",  "ball",       "tire",   "helmet", "book",  "phone",     "scissors",
      "plate", "glove",  "drum",       "bag",    "chain", "box",    "towel",     "clipboard",
      "bench", "cone",   "net",        "board",  "lid",   "brush",  "tray",      "kettle"};
  std::array<Category, kNumCategories> out{};
  for (int i = 0; i < kNumCategories; ++i) {
    const int hue = i % 8, dark = (i / 8) % 2, striped = (i / 16) % 2;
    out[i] = Category{names[i], hsv(hue * 45.0, 0.85, dark ? 0.55 : 0.95), striped == 1,
                      ((i + i / 8 + i / 16) % 2) ? ShapeKind::Polygon : ShapeKind::Ellipse};
  }
  return out;
}

}  // namespace detail

inline const std::array<Category, kNumCategories>& categories() {
  static const auto table = detail::make_categories();
  return table;
}

inline constexpr std::array<const char*, 6> kScenarios = {"cooking", "bike_repair", "health",
                                                          "music",   "basketball",  "soccer"};

inline bool is_scenario(const std::string& s) {
  return std::find(kScenarios.begin(), kScenarios.end(), s) != kScenarios.end();
}

struct SceneSpec {
  std::uint64_t seed = 0;
  int n_objects = 3;
  int height = 64;
  int width = 64;
  double clutter_density = 0.3;
  /// Ego zoom factor relative to the exo view.
  double scale_ratio = 2.5;
  double occlusion_rate = 0.1;
  std::string scenario = "music";
};

/// Difficulty preset per scenario tag. "cooking" is the cluttered, small
/// object regime; "music" and "basketball" are the easy ones.
inline SceneSpec scenario_spec(const std::string& scenario, std::uint64_t seed, int height = 64,
                               int width = 64) {
  SceneSpec s;
  s.seed = seed;
  s.height = height;
  s.width = width;
  s.scenario = scenario;
  if (scenario == "cooking") {
    s.n_objects = 5, s.clutter_density = 0.9, s.scale_ratio = 3.0, s.occlusion_rate = 0.15;
  } else if (scenario == "bike_repair") {
    s.n_objects = 4, s.clutter_density = 0.6, s.scale_ratio = 2.5, s.occlusion_rate = 0.1;
  } else if (scenario == "health") {
    s.n_objects = 4, s.clutter_density = 0.4, s.scale_ratio = 2.5, s.occlusion_rate = 0.1;
  } else if (scenario == "music") {
    s.n_objects = 3, s.clutter_density = 0.2, s.scale_ratio = 2.0, s.occlusion_rate = 0.05;
  } else if (scenario == "basketball") {
    s.n_objects = 3, s.clutter_density = 0.1, s.scale_ratio = 2.0, s.occlusion_rate = 0.05;
  } else if (scenario == "soccer") {
    s.n_objects = 3, s.clutter_density = 0.3, s.scale_ratio = 3.5, s.occlusion_rate = 0.1;
  } else {
    throw InvalidSpec("unknown scenario '" + scenario + "'");
  }
  return s;
}

inline void validate(const SceneSpec& spec) {
  if (spec.n_objects < 1 || spec.n_objects > 8) throw InvalidSpec("n_objects must be in [1, 8]");
  if (spec.height < 16 || spec.width < 16) throw InvalidSpec("canvas must be at least 16x16");
  if (!(spec.clutter_density >= 0.0 && spec.clutter_density <= 1.0)) {
    throw InvalidSpec("clutter_density must be in [0, 1]");
  }
  if (!(spec.scale_ratio > 1.0) || spec.scale_ratio > 8.0) {
    throw InvalidSpec("scale_ratio must be in (1, 8]");
  }
  if (!(spec.occlusion_rate >= 0.0 && spec.occlusion_rate <= 1.0)) {
    throw InvalidSpec("occlusion_rate must be in [0, 1]");
  }
  if (!is_scenario(spec.scenario)) throw InvalidSpec("unknown scenario '" + spec.scenario + "'");
}

// ---------------------------------------------------------------------------
// Geometry

struct Point {
  double y = 0, x = 0;
};

/// Maps view pixel coordinates to world coordinates (world == exo pixels).
struct ViewTransform {
  // world = center_world + m * (pixel - center_pixel)
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  Point center_world{}, center_pixel{};

  Point to_world(Point p) const {
    const double dy = p.y - center_pixel.y, dx = p.x - center_pixel.x;
    return {center_world.y + m00 * dy + m01 * dx, center_world.x + m10 * dy + m11 * dx};
  }

  Point to_pixel(Point w) const {
    const double det = m00 * m11 - m01 * m10;
    const double dy = w.y - center_world.y, dx = w.x - center_world.x;
    return {center_pixel.y + (m11 * dy - m01 * dx) / det,
            center_pixel.x + (-m10 * dy + m00 * dx) / det};
  }

  /// Ego camera: rotation by `angle` with per-axis magnification (sy, sx).
  static ViewTransform ego(Point center_world, Point center_pixel, double angle, double sy,
                           double sx) {
    const double c = std::cos(angle), s = std::sin(angle);
    ViewTransform t;
    t.m00 = c / sy;
    t.m01 = -s / sx;
    t.m10 = s / sy;
    t.m11 = c / sx;
    t.center_world = center_world;
    t.center_pixel = center_pixel;
    return t;
  }
};

/// A procedural object in world coordinates.
struct SceneObject {
  int category = 0;
  ShapeKind shape = ShapeKind::Ellipse;
  Point center{};
  double radius_y = 1, radius_x = 1;
  double angle = 0;
  bool striped = false;
  double stripe_angle = 0;
  /// Polygon vertices in the unit frame (before radius scaling / rotation).
  std::vector<Point> vertices;

  Point to_local(Point w) const {
    const double dy = w.y - center.y, dx = w.x - center.x;
    const double c = std::cos(angle), s = std::sin(angle);
    return {(c * dy + s * dx) / radius_y, (-s * dy + c * dx) / radius_x};
  }

  bool contains(Point w) const {
    const Point u = to_local(w);
    if (shape == ShapeKind::Ellipse) return u.y * u.y + u.x * u.x <= 1.0;
    bool inside = false;
    for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
      const auto& a = vertices[i];
      const auto& b = vertices[j];
      if ((a.y > u.y) != (b.y > u.y) && u.x < (b.x - a.x) * (u.y - a.y) / (b.y - a.y) + a.x) {
        inside = !inside;
      }
    }
    return inside;
  }

  Rgb color_at(Point w) const {
    Rgb base = categories()[category].color;
    if (!striped) return base;
    const Point u = to_local(w);
    const double t = u.y * std::cos(stripe_angle) + u.x * std::sin(stripe_angle);
    if (static_cast<long>(std::floor(t * 2.5)) % 2 == 0) return base;
    return {base.r * 0.55f, base.g * 0.55f, base.b * 0.55f};
  }

  /// Points on the outline in world coordinates.
  std::vector<Point> outline(int n = 48) const {
    std::vector<Point> pts;
    const double c = std::cos(angle), s = std::sin(angle);
    auto to_world = [&](Point u) {
      const double ly = u.y * radius_y, lx = u.x * radius_x;
      return Point{center.y + c * ly - s * lx, center.x + s * ly + c * lx};
    };
    if (shape == ShapeKind::Ellipse) {
      for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        pts.push_back(to_world({std::sin(t), std::cos(t)}));
      }
    } else {
      for (const auto& v : vertices) pts.push_back(to_world(v));
    }
    return pts;
  }
};

// ---------------------------------------------------------------------------
// Scenes and samples

struct ClutterPatch {
  Point center{};
  double radius = 1;
  bool disc = true;
  Rgb color{};
};

struct Occluder {
  BoundingBox box;  // view pixels, inclusive
  float shade = 0.2f;
};

struct Photometric {
  std::array<float, 3> gain{1, 1, 1};
  std::array<float, 3> bias{0, 0, 0};
};

struct SceneObjectViews {
  SceneObject object;
  /// Visible pixels after compositing, per view (index by View).
  std::array<BinaryMask, 2> masks;
  std::array<bool, 2> visible{false, false};
  /// View in which a dedicated occluder hides the object, if any.
  std::optional<View> occluded_in;
};

struct Scene {
  SceneSpec spec;
  ViewTransform ego;
  std::array<std::shared_ptr<const Image>, 2> frames;
  std::vector<SceneObjectViews> objects;
  std::vector<ClutterPatch> clutter;
  std::array<std::vector<Occluder>, 2> occluders;
  std::array<Photometric, 2> photometric;
  Rgb background{};

  ViewTransform transform(View v) const { return v == View::Ego ? ego : ViewTransform{}; }
};

struct CorrespondenceSample {
  std::string id;
  std::shared_ptr<const Image> query_frame;
  std::shared_ptr<const Image> target_frame;
  BinaryMask query_mask;
  std::optional<BinaryMask> gt_target_mask;
  bool gt_visible = false;
  int category = 0;
  std::string scenario;
  Direction direction = Direction::Ego2Exo;
  /// Object identity shared by both directions, e.g. "scene0003_obj1".
  std::string object_id;
  int frame_index = 0;

  /// Stable key for seeded per-sample randomness.
  std::uint64_t key() const { return fnv1a(id); }
};

namespace detail {

inline Rgb background_at(const Scene& scene, Point w) {
  const double wave = 0.04 * std::sin(w.y * 0.11 + 0.7) * std::cos(w.x * 0.09 - 0.3);
  return {static_cast<float>(scene.background.r + wave), static_cast<float>(scene.background.g + wave),
          static_cast<float>(scene.background.b + wave)};
}

inline bool clutter_contains(const ClutterPatch& p, Point w) {
  const double dy = w.y - p.center.y, dx = w.x - p.center.x;
  if (p.disc) return dy * dy + dx * dx <= p.radius * p.radius;
  return std::fabs(dy) <= p.radius && std::fabs(dx) <= p.radius * 1.6;
}

inline bool occluded(const std::vector<Occluder>& occ, int r, int c) {
  for (const auto& o : occ) {
    if (r >= o.box.row0 && r <= o.box.row1 && c >= o.box.col0 && c <= o.box.col1) return true;
  }
  return false;
}

/// Coverage of a single object in a view, ignoring everything else.
inline BinaryMask object_coverage(const SceneObject& obj, const ViewTransform& t, int h, int w) {
  BinaryMask m(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (obj.contains(t.to_world({static_cast<double>(r), static_cast<double>(c)}))) m.set(r, c);
    }
  }
  return m;
}

inline SceneObject make_object(Rng& rng, int category, Point center, double radius) {
  SceneObject o;
  o.category = category;
  const auto& cat = categories()[category];
  o.shape = cat.shape;
  o.striped = cat.striped;
  o.center = center;
  const double aspect = uniform(rng, 0.65, 1.5);
  o.radius_y = radius * std::sqrt(aspect);
  o.radius_x = radius / std::sqrt(aspect);
  o.angle = uniform(rng, 0.0, std::numbers::pi);
  o.stripe_angle = uniform(rng, 0.0, std::numbers::pi);
  if (o.shape == ShapeKind::Polygon) {
    const int k = uniform_int(rng, 3, 6);
    const double jitter = std::numbers::pi / k * 0.4;
    for (int i = 0; i < k; ++i) {
      const double t = 2.0 * std::numbers::pi * i / k + uniform(rng, -jitter, jitter);
      const double rr = uniform(rng, 0.85, 1.15);
      o.vertices.push_back({rr * std::sin(t), rr * std::cos(t)});
    }
  }
  return o;
}

inline bool inside_frame(const std::vector<Point>& pts, const ViewTransform& t, int h, int w,
                         double margin) {
  for (const auto& p : pts) {
    const Point q = t.to_pixel(p);
    if (q.y < margin || q.x < margin || q.y > h - 1 - margin || q.x > w - 1 - margin) return false;
  }
  return true;
}

inline std::shared_ptr<const Image> render_view(const Scene& scene, View view, Rng& noise_rng) {
  const int h = scene.spec.height, w = scene.spec.width;
  const ViewTransform t = scene.transform(view);
  const auto& photo = scene.photometric[static_cast<int>(view)];
  const auto& occ = scene.occluders[static_cast<int>(view)];
  auto image = std::make_shared<Image>(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Point wp = t.to_world({static_cast<double>(r), static_cast<double>(c)});
      Rgb px = background_at(scene, wp);
      for (const auto& p : scene.clutter) {
        if (clutter_contains(p, wp)) px = p.color;
      }
      for (const auto& o : scene.objects) {
        if (o.object.contains(wp)) px = o.object.color_at(wp);
      }
      if (occluded(occ, r, c)) {
        const float s = ((r / 2 + c / 2) % 2) ? 0.22f : 0.3f;
        px = {s, s, s};
      }
      const std::array<float, 3> rgb{px.r, px.g, px.b};
      for (int ch = 0; ch < 3; ++ch) {
        const double v = rgb[ch] * photo.gain[ch] + photo.bias[ch] + normal(noise_rng, 0.0, 0.015);
        image->at(r, c, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  quantize(*image);
  return image;
}

}  // namespace detail

/// Coverage of one object re-rendered alone in the given view.
inline BinaryMask render_object_alone(const Scene& scene, std::size_t object_index, View view) {
  return detail::object_coverage(scene.objects.at(object_index).object, scene.transform(view),
                                 scene.spec.height, scene.spec.width);
}

/// Renders a world of procedural objects, an exo frame covering the whole
/// canvas and an ego frame that is a zoomed, rotated, anisotropically scaled
/// crop around the camera wearer. Deterministic in `spec`.
inline Scene render_scene(const SceneSpec& spec) {
  validate(spec);
  const int h = spec.height, w = spec.width;
  const double s = spec.scale_ratio;
  const double short_side = std::min(h, w);
  Rng rng(derive_seed(spec.seed, 0x5ce7e));

  constexpr int kMaxAttempts = 200;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Scene scene;
    scene.spec = spec;
    {
      const double hue = uniform(rng, 0.0, 360.0);
      scene.background = detail::hsv(hue, uniform(rng, 0.05, 0.25), uniform(rng, 0.35, 0.7));
    }

    // Ego camera: the footprint must lie mostly inside the world canvas.
    const double aniso = uniform(rng, 0.85, 1.18);
    const double sy = s * aniso, sx = s / aniso;
    const double footprint = short_side / s;
    const double lo = std::min(0.5 * short_side, 0.6 * footprint);
    const Point wearer{uniform(rng, lo, h - lo), uniform(rng, lo, w - lo)};
    const double angle = uniform(rng, -0.6, 0.6);
    scene.ego = ViewTransform::ego(wearer, {(h - 1) / 2.0, (w - 1) / 2.0}, angle, sy, sx);

    // Distinct categories per scene so correspondence is well posed.
    std::vector<int> cats(kNumCategories);
    for (int i = 0; i < kNumCategories; ++i) cats[i] = i;
    std::shuffle(cats.begin(), cats.end(), rng);

    bool ok = true;
    for (int k = 0; k < spec.n_objects && ok; ++k) {
      bool placed = false;
      for (int tries = 0; tries < 60 && !placed; ++tries) {
        const double ego_radius = uniform(rng, 0.10, 0.17) * short_side;
        const double margin = ego_radius * 1.3 + 1.0;
        const Point ego_center{uniform(rng, margin, h - 1 - margin), uniform(rng, margin, w - 1 - margin)};
        const Point center = scene.ego.to_world(ego_center);
        SceneObject obj = detail::make_object(rng, cats[k], center, ego_radius / s);
        const auto outline = obj.outline();
        if (!detail::inside_frame(outline, scene.ego, h, w, 0.5)) continue;
        if (!detail::inside_frame(outline, ViewTransform{}, h, w, 0.5)) continue;
        bool overlaps = false;
        for (const auto& other : scene.objects) {
          const double d = std::hypot(other.object.center.y - center.y, other.object.center.x - center.x);
          const double ro = std::max(other.object.radius_y, other.object.radius_x);
          const double rn = std::max(obj.radius_y, obj.radius_x);
          if (d < 0.85 * (ro + rn)) overlaps = true;
        }
        if (overlaps) continue;
        SceneObjectViews v;
        v.object = std::move(obj);
        scene.objects.push_back(std::move(v));
        placed = true;
      }
      ok = placed;
    }
    if (!ok) continue;

    // Background clutter in world coordinates, drawn beneath objects.
    const int n_clutter = static_cast<int>(std::lround(spec.clutter_density * 0.015 * h * w));
    for (int i = 0; i < n_clutter; ++i) {
      ClutterPatch p;
      p.center = {uniform(rng, 0.0, h - 1.0), uniform(rng, 0.0, w - 1.0)};
      p.radius = uniform(rng, 0.6, 2.2);
      p.disc = uniform(rng) < 0.5;
      p.color = detail::hsv(uniform(rng, 0.0, 360.0), uniform(rng, 0.0, 0.35), uniform(rng, 0.2, 0.85));
      scene.clutter.push_back(p);
    }

    // Dedicated occluders hide selected objects in one view.
    for (auto& o : scene.objects) {
      if (uniform(rng) >= spec.occlusion_rate) continue;
      const View v = uniform(rng) < 0.5 ? View::Ego : View::Exo;
      const auto cover = detail::object_coverage(o.object, scene.transform(v), h, w);
      auto box = bounding_box(cover);
      if (box.empty()) continue;
      box.row0 = std::max(0, box.row0 - 1);
      box.col0 = std::max(0, box.col0 - 1);
      box.row1 = std::min(h - 1, box.row1 + 1);
      box.col1 = std::min(w - 1, box.col1 + 1);
      scene.occluders[static_cast<int>(v)].push_back({box, 0.25f});
      o.occluded_in = v;
    }

    for (auto& p : scene.photometric) {
      for (int ch = 0; ch < 3; ++ch) {
        p.gain[ch] = static_cast<float>(uniform(rng, 0.8, 1.2));
        p.bias[ch] = static_cast<float>(uniform(rng, -0.06, 0.06));
      }
    }

    // Visible masks after compositing: later objects paint over earlier ones,
    // occluders over everything.
    for (const View v : {View::Ego, View::Exo}) {
      const auto t = scene.transform(v);
      const auto& occ = scene.occluders[static_cast<int>(v)];
      std::vector<BinaryMask> masks(scene.objects.size(), BinaryMask(h, w));
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          if (detail::occluded(occ, r, c)) continue;
          const Point wp = t.to_world({static_cast<double>(r), static_cast<double>(c)});
          for (std::size_t i = scene.objects.size(); i-- > 0;) {
            if (scene.objects[i].object.contains(wp)) {
              masks[i].set(r, c);
              break;
            }
          }
        }
      }
      for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const auto vi = static_cast<int>(v);
        scene.objects[i].visible[vi] = area(masks[i]) > 0;
        scene.objects[i].masks[vi] = std::move(masks[i]);
      }
    }

    // Objects that are not deliberately occluded must keep a substantial
    // visible part in both views; otherwise draw a new layout.
    for (std::size_t i = 0; i < scene.objects.size() && ok; ++i) {
      const auto& o = scene.objects[i];
      for (const View v : {View::Ego, View::Exo}) {
        if (o.occluded_in == v) continue;
        const auto alone = area(render_object_alone(scene, i, v));
        if (alone == 0 || area(o.masks[static_cast<int>(v)]) * 2 < alone) ok = false;
      }
    }
    if (!ok) continue;

    Rng noise_rng(derive_seed(spec.seed, 0x4015e));
    scene.frames[0] = detail::render_view(scene, View::Ego, noise_rng);
    scene.frames[1] = detail::render_view(scene, View::Exo, noise_rng);
    return scene;
  }
  throw InvalidSpec("could not lay out " + std::to_string(spec.n_objects) +
                    " objects for seed " + std::to_string(spec.seed));
}

/// Emits one sample per (object, direction) whose query-view mask is nonempty.
/// `scene_name` prefixes the sample ids; `frame_index` tags every sample.
inline std::vector<CorrespondenceSample> scene_samples(const Scene& scene, const std::string& scene_name,
                                                       int frame_index = 0) {
  std::vector<CorrespondenceSample> out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    const std::string object_id = scene_name + "_obj" + std::to_string(i);
    for (const Direction d : {Direction::Ego2Exo, Direction::Exo2Ego}) {
      const auto q = static_cast<int>(query_view(d));
      const auto t = static_cast<int>(target_view(d));
      if (!o.visible[q]) continue;
      CorrespondenceSample s;
      s.id = object_id + "_" + to_string(d);
      s.object_id = object_id;
      s.query_frame = scene.frames[q];
      s.target_frame = scene.frames[t];
      s.query_mask = o.masks[q];
      s.gt_visible = o.visible[t];
      if (s.gt_visible) s.gt_target_mask = o.masks[t];
      s.category = o.object.category;
      s.scenario = scene.spec.scenario;
      s.direction = d;
      s.frame_index = frame_index;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::vector<CorrespondenceSample> generate_scene(const SceneSpec& spec) {
  return scene_samples(render_scene(spec), "s" + std::to_string(spec.seed));
}

// ---------------------------------------------------------------------------
// Splits

struct SplitFractions {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct DatasetSplit {
  std::vector<CorrespondenceSample> train, val, test;
};

namespace detail {

/// Largest-remainder apportionment of `n` items by `fractions`.
inline std::array<std::int64_t, 3> apportion(std::int64_t n, const std::array<double, 3>& f) {
  std::array<std::int64_t, 3> out{};
  std::array<double, 3> rem{};
  std::int64_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = f[k] * static_cast<double>(n);
    out[k] = static_cast<std::int64_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(out[k]);
    assigned += out[k];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (rem[k] > rem[best] + 1e-12) best = k;
    }
    ++out[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return out;
}

}  // namespace detail

/// Seed-deterministic partition, stratified by scenario: every scenario's
/// share of each split is within one sample of its exact proportion while
/// the global split sizes follow largest-remainder rounding.
inline DatasetSplit split(std::vector<CorrespondenceSample> samples, SplitFractions fractions,
                          std::uint64_t seed = 0) {
  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  if (f[0] < 0 || f[1] < 0 || f[2] < 0 || std::fabs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw InvalidSpec("split fractions must be nonnegative and sum to 1");
  }
  std::vector<std::string> groups;
  for (const auto& s : samples) {
    if (std::find(groups.begin(), groups.end(), s.scenario) == groups.end()) groups.push_back(s.scenario);
  }
  std::sort(groups.begin(), groups.end());

  std::vector<std::vector<std::size_t>> members(groups.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto g = std::find(groups.begin(), groups.end(), samples[i].scenario) - groups.begin();
    members[g].push_back(i);
  }

  // Per-group floors, then hand out the leftover units (at most one per
  // group/split cell) to the splits with the largest remaining demand.
  const auto global = detail::apportion(static_cast<std::int64_t>(samples.size()), f);
  std::vector<std::array<std::int64_t, 3>> quota(groups.size());
  std::array<std::int64_t, 3> demand = global;
  std::vector<std::int64_t> supply(groups.size());
  std::vector<std::array<double, 3>> frac(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto n = static_cast<std::int64_t>(members[g].size());
    std::int64_t used = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = f[k] * static_cast<double>(n);
      quota[g][k] = static_cast<std::int64_t>(std::floor(exact + 1e-9));
      frac[g][k] = exact - static_cast<double>(quota[g][k]);
      demand[k] -= quota[g][k];
      used += quota[g][k];
    }
    supply[g] = n - used;
  }
  std::vector<std::size_t> order(groups.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return supply[a] > supply[b]; });
  for (const auto g : order) {
    for (std::int64_t unit = 0; unit < supply[g]; ++unit) {
      int best = -1;
      for (int k = 0; k < 3; ++k) {
        const auto floor_k = static_cast<std::int64_t>(std::floor(f[k] * members[g].size() + 1e-9));
        if (quota[g][k] > floor_k) continue;
        if (best < 0 || demand[k] > demand[best] ||
            (demand[k] == demand[best] && frac[g][k] > frac[g][best])) {
          best = k;
        }
      }
      ++quota[g][best];
      --demand[best];
    }
  }

  DatasetSplit out;
  std::array<std::vector<CorrespondenceSample>*, 3> dst{&out.train, &out.val, &out.test};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Rng rng(derive_seed(seed, fnv1a(groups[g])));
    auto idx = members[g];
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::int64_t j = 0; j < quota[g][k]; ++j) dst[k]->push_back(std::move(samples[idx[pos++]]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkConfig {
  std::uint64_t seed = 0;
  int n_train = 2000;
  int n_val = 200;
  int height = 64;
  int width = 64;
};

struct Benchmark {
  std::vector<CorrespondenceSample> train, val;
};

/// Draws scenes (cycling through the six scenarios) until `count` samples
/// exist. `stream` separates the train and val scene seeds.
inline std::vector<CorrespondenceSample> draw_samples(const BenchmarkConfig& cfg, std::uint64_t stream,
                                                      int count) {
  std::vector<CorrespondenceSample> out;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    const std::string scenario = kScenarios[i % kScenarios.size()];
    const auto spec = scenario_spec(scenario, derive_seed(derive_seed(cfg.seed, stream), i), cfg.height,
                                    cfg.width);
    const std::string name = (stream == 1 ? "train" : "val") + std::string("_scene") + std::to_string(i);
    for (auto& s : scene_samples(render_scene(spec), name, i)) {
      if (static_cast<int>(out.size()) == count) break;
      out.push_back(std::move(s));
    }
  }
  return out;
}

/// Default desk-scale benchmark with disjoint train and val scenes.
inline Benchmark make_benchmark(const BenchmarkConfig& cfg) {
  return {draw_samples(cfg, 1, cfg.n_train), draw_samples(cfg, 2, cfg.n_val)};
}

}  // namespace xvc
