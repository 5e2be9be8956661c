#include "lipad/digit_render.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "lipad/errors.hpp"

namespace lipad {

namespace {

struct Pt {
    double x;
    double y;
};

// glyph primitives in a y-up unit box
struct ArcPrim {
    Pt c;
    double rx, ry;
    double a0_deg, a1_deg;
};
struct LinePrim {
    Pt p0, p1;
};

struct Glyph {
    std::vector<ArcPrim> arcs;
    std::vector<LinePrim> lines;
};

const Glyph& glyph_for(int digit) {
    static const std::vector<Glyph> glyphs = [] {
        std::vector<Glyph> g(10);
        g[0].arcs = {{{0.50, 0.50}, 0.30, 0.40, 0.0, 360.0}};
        g[1].lines = {{{0.35, 0.72}, {0.50, 0.92}}, {{0.50, 0.92}, {0.50, 0.08}}};
        g[2].arcs = {{{0.50, 0.66}, 0.26, 0.26, 170.0, -30.0}};
        g[2].lines = {{{0.725, 0.53}, {0.22, 0.08}}, {{0.22, 0.08}, {0.80, 0.08}}};
        g[3].arcs = {{{0.47, 0.70}, 0.24, 0.22, 150.0, -80.0}, {{0.47, 0.29}, 0.26, 0.23, 80.0, -150.0}};
        g[4].lines = {{{0.62, 0.92}, {0.20, 0.35}}, {{0.20, 0.35}, {0.82, 0.35}}, {{0.62, 0.92}, {0.62, 0.08}}};
        g[5].lines = {{{0.75, 0.92}, {0.30, 0.92}}, {{0.30, 0.92}, {0.28, 0.55}}};
        g[5].arcs = {{{0.47, 0.32}, 0.27, 0.26, 115.0, -120.0}};
        g[6].arcs = {{{0.48, 0.30}, 0.25, 0.24, 0.0, 360.0}, {{0.75, 0.45}, 0.45, 0.47, 115.0, 180.0}};
        g[7].lines = {{{0.22, 0.92}, {0.80, 0.92}}, {{0.80, 0.92}, {0.42, 0.08}}, {{0.34, 0.50}, {0.66, 0.50}}};
        g[8].arcs = {{{0.50, 0.70}, 0.21, 0.20, 0.0, 360.0}, {{0.50, 0.285}, 0.245, 0.225, 0.0, 360.0}};
        g[9].arcs = {{{0.52, 0.68}, 0.24, 0.23, 0.0, 360.0}};
        g[9].lines = {{{0.76, 0.68}, {0.62, 0.08}}};
        return g;
    }();
    return glyphs[digit];
}

struct Affine {
    // column-major 2x2 plus translation, applied about the box center
    double m00, m01, m10, m11, tx, ty;
    Pt apply(Pt p) const {
        const double x = p.x - 0.5, y = p.y - 0.5;
        return {0.5 + m00 * x + m01 * y + tx, 0.5 + m10 * x + m11 * y + ty};
    }
};

using Segments = std::vector<std::pair<Pt, Pt>>;

void emit_polyline(const std::vector<Pt>& pts, const Affine& t, Rng& rng, double wobble, Segments& out) {
    std::vector<Pt> mapped(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        Pt p = t.apply(pts[i]);
        p.x += rng.normal(0.0, wobble);
        p.y += rng.normal(0.0, wobble);
        mapped[i] = p;
    }
    for (size_t i = 0; i + 1 < mapped.size(); ++i) out.emplace_back(mapped[i], mapped[i + 1]);
}

Segments glyph_segments(int digit, Rng& rng) {
    const Glyph& g = glyph_for(digit);
    const double deg = std::numbers::pi / 180.0;

    Affine t;
    const double rot = rng.uniform(-10.0, 10.0) * deg;
    const double sx = rng.uniform(0.82, 1.05);
    const double sy = rng.uniform(0.82, 1.05);
    const double shear = rng.uniform(-0.12, 0.12);
    // rotation . shear . scale
    const double cr = std::cos(rot), sr = std::sin(rot);
    t.m00 = cr * sx;
    t.m01 = (cr * shear - sr) * sy;
    t.m10 = sr * sx;
    t.m11 = (sr * shear + cr) * sy;
    t.tx = rng.uniform(-0.05, 0.05);
    t.ty = rng.uniform(-0.05, 0.05);

    const double wobble = 0.008;
    Segments segs;
    for (const ArcPrim& a : g.arcs) {
        const double a0 = a.a0_deg * deg, a1 = a.a1_deg * deg;
        const int steps = std::max(8, static_cast<int>(std::abs(a1 - a0) / (6.0 * deg)));
        std::vector<Pt> pts(steps + 1);
        for (int s = 0; s <= steps; ++s) {
            const double ang = a0 + (a1 - a0) * static_cast<double>(s) / steps;
            pts[s] = {a.c.x + a.rx * std::cos(ang), a.c.y + a.ry * std::sin(ang)};
        }
        emit_polyline(pts, t, rng, wobble, segs);
    }
    for (const LinePrim& l : g.lines) emit_polyline({l.p0, l.p1}, t, rng, wobble, segs);
    return segs;
}

double seg_dist(double px, double py, const Pt& a, const Pt& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = px - a.x, wy = py - a.y;
    const double vv = vx * vx + vy * vy;
    const double u = vv > 0.0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
    const double dx = wx - u * vx, dy = wy - u * vy;
    return std::sqrt(dx * dx + dy * dy);
}

constexpr long kSide = 28;
constexpr double kMargin = 3.0; // glyph box maps to pixels [margin, 28-margin)

} // namespace

Tensor render_digit(int digit, Rng& rng) {
    if (digit < 0 || digit > 9) throw ContractError("render_digit: digit must be 0..9");
    const Segments segs = glyph_segments(digit, rng);
    const double thick = rng.uniform(0.65, 1.15);  // core half-width in px
    const double soft = rng.uniform(0.75, 1.05);   // antialias falloff in px
    const double ink = rng.uniform(0.82, 1.0);

    const double span = static_cast<double>(kSide) - 2.0 * kMargin;
    Tensor img(1, kSide * kSide);
    for (const auto& [a, b] : segs) {
        // map unit coords (y-up) to pixel coords (y-down)
        const Pt pa = {kMargin + a.x * span, kMargin + (1.0 - a.y) * span};
        const Pt pb = {kMargin + b.x * span, kMargin + (1.0 - b.y) * span};
        const double reach = thick + soft + 1.0;
        const long x0 = std::max(0L, static_cast<long>(std::floor(std::min(pa.x, pb.x) - reach)));
        const long x1 = std::min(kSide - 1, static_cast<long>(std::ceil(std::max(pa.x, pb.x) + reach)));
        const long y0 = std::max(0L, static_cast<long>(std::floor(std::min(pa.y, pb.y) - reach)));
        const long y1 = std::min(kSide - 1, static_cast<long>(std::ceil(std::max(pa.y, pb.y) + reach)));
        for (long y = y0; y <= y1; ++y) {
            for (long x = x0; x <= x1; ++x) {
                const double d = seg_dist(static_cast<double>(x), static_cast<double>(y), pa, pb);
                const double v = std::clamp(1.0 - (d - thick) / soft, 0.0, 1.0);
                double& px = img[y * kSide + x];
                px = std::max(px, ink * v);
            }
        }
    }
    return img;
}

LabeledData render_digit_corpus(long per_class, std::uint64_t seed) {
    if (per_class < 1) throw ContractError("render_digit_corpus: per_class must be >= 1");
    Rng root(seed);
    const long n = per_class * 10;
    LabeledData d;
    d.points = Tensor(n, kSide * kSide);
    d.labels.assign(n, 0);
    d.class_ids.resize(n);

    Rng order = root.child("order");
    const std::vector<int> shuffle = order.permutation(static_cast<int>(n));
    long slot = 0;
    for (int digit = 0; digit < 10; ++digit) {
        Rng rng_digit = root.child(static_cast<std::uint64_t>(digit) + 1000);
        for (long i = 0; i < per_class; ++i, ++slot) {
            const Tensor img = render_digit(digit, rng_digit);
            const long row = shuffle[slot];
            for (long c = 0; c < img.size(); ++c) d.points.at(row, c) = img[c];
            d.class_ids[row] = digit;
        }
    }
    return d;
}

void write_digit_corpus_idx(const std::string& dir, long train_per_class, long test_per_class, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const LabeledData train = render_digit_corpus(train_per_class, Rng(seed).child("train-corpus").seed());
    const LabeledData test = render_digit_corpus(test_per_class, Rng(seed).child("test-corpus").seed());
    write_idx_images(dir + "/train-images-idx3-ubyte", train.points, kSide);
    write_idx_labels(dir + "/train-labels-idx1-ubyte", train.class_ids);
    write_idx_images(dir + "/t10k-images-idx3-ubyte", test.points, kSide);
    write_idx_labels(dir + "/t10k-labels-idx1-ubyte", test.class_ids);
}

} // namespace lipad
