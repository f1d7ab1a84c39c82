#include "tihdp/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tihdp {
namespace {

constexpr const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* robot_color(int i) { return kPalette[i % 10]; }
const char* object_color(int l) { return kPalette[(l + 3) % 10]; }

struct SvgDoc {
    std::string buf;

    void append(const char* fmt, ...) {
        char line[512];
        va_list args;
        va_start(args, fmt);
        std::vsnprintf(line, sizeof(line), fmt, args);
        va_end(args);
        buf += line;
    }
};

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << bytes;
}

// World-to-pixel mapping with a shared square scale so every window uses the
// same frame.
struct Frame {
    double min_x = 0.0, min_y = 0.0;
    double scale = 1.0;
    double px0 = 0.0, py1 = 0.0;  // pixel origin (left edge, bottom edge)

    double x(Vec2 p) const { return px0 + (p.x - min_x) * scale; }
    double y(Vec2 p) const { return py1 - (p.y - min_y) * scale; }
};

Frame make_frame(const Trajectory& traj, double plot_x0, double plot_y0, double plot_size) {
    double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
    bool any = false;
    auto grow = [&](Vec2 p) {
        if (!any) {
            lo_x = hi_x = p.x;
            lo_y = hi_y = p.y;
            any = true;
            return;
        }
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    };
    for (Vec2 g : traj.goals) grow(g);
    for (const auto& step : traj.steps) {
        for (const auto& r : step.robots) grow(r.position);
        for (const auto& o : step.objects) grow(o.position);
    }
    if (!any) grow(Vec2{0.0, 0.0});

    double pad = 0.5;
    lo_x -= pad;
    hi_x += pad;
    lo_y -= pad;
    hi_y += pad;
    double extent = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});

    Frame f;
    f.scale = plot_size / extent;
    // Center the shorter axis inside the square plot area.
    f.min_x = lo_x - 0.5 * (extent - (hi_x - lo_x));
    f.min_y = lo_y - 0.5 * (extent - (hi_y - lo_y));
    f.px0 = plot_x0;
    f.py1 = plot_y0 + plot_size;
    return f;
}

void render_window(const Trajectory& traj, const Frame& f, std::size_t begin, std::size_t end,
                   const std::string& path) {
    const double w = 720.0, h = 760.0;
    SvgDoc svg;
    svg.append("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
               "viewBox=\"0 0 %.0f %.0f\">\n",
               w, h, w, h);
    svg.append("<rect width=\"%.0f\" height=\"%.0f\" fill=\"#ffffff\"/>\n", w, h);
    svg.append("<text x=\"16\" y=\"22\" font-family=\"monospace\" font-size=\"13\">%s seed=%llu "
               "steps %zu..%zu</text>\n",
               escape_text(traj.variant).c_str(),
               static_cast<unsigned long long>(traj.seed), begin,
               end > begin ? end - 1 : begin);
    svg.append("<rect x=\"16\" y=\"36\" width=\"688\" height=\"688\" fill=\"none\" "
               "stroke=\"#cccccc\"/>\n");

    for (std::size_t l = 0; l < traj.goals.size(); ++l) {
        double gx = f.x(traj.goals[l]), gy = f.y(traj.goals[l]);
        svg.append("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                   "stroke-width=\"2\"/>\n",
                   gx - 7.0, gy, gx + 7.0, gy, object_color(static_cast<int>(l)));
        svg.append("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                   "stroke-width=\"2\"/>\n",
                   gx, gy - 7.0, gx, gy + 7.0, object_color(static_cast<int>(l)));
    }

    if (end > begin) {
        std::size_t objects = traj.steps[begin].objects.size();
        for (std::size_t l = 0; l < objects; ++l) {
            svg.append("<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"2\" "
                       "stroke-dasharray=\"5 4\" points=\"",
                       object_color(static_cast<int>(l)));
            for (std::size_t t = begin; t < end; ++t) {
                Vec2 p = traj.steps[t].objects[l].position;
                svg.append("%.2f,%.2f ", f.x(p), f.y(p));
            }
            svg.append("\"/>\n");
            const auto& last = traj.steps[end - 1].objects[l];
            svg.append("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"7\" stroke=\"%s\" fill=\"%s\" "
                       "fill-opacity=\"%.2f\"/>\n",
                       f.x(last.position), f.y(last.position), object_color(static_cast<int>(l)),
                       object_color(static_cast<int>(l)), last.completed ? 0.9 : 0.25);
        }
        std::size_t robots = traj.steps[begin].robots.size();
        for (std::size_t i = 0; i < robots; ++i) {
            svg.append("<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"",
                       robot_color(static_cast<int>(i)));
            for (std::size_t t = begin; t < end; ++t) {
                Vec2 p = traj.steps[t].robots[i].position;
                svg.append("%.2f,%.2f ", f.x(p), f.y(p));
            }
            svg.append("\"/>\n");
            Vec2 first = traj.steps[begin].robots[i].position;
            Vec2 last = traj.steps[end - 1].robots[i].position;
            svg.append("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" stroke=\"%s\" "
                       "fill=\"none\"/>\n",
                       f.x(first), f.y(first), robot_color(static_cast<int>(i)));
            svg.append("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\"/>\n", f.x(last),
                       f.y(last), robot_color(static_cast<int>(i)));
        }
    } else {
        svg.append("<text x=\"16\" y=\"744\" font-family=\"monospace\" font-size=\"13\">no "
                   "steps recorded</text>\n");
    }

    svg.append("</svg>\n");
    write_file(path, svg.buf);
}

void render_priorities(const Trajectory& traj, int robot, const std::string& path) {
    const double w = 720.0, h = 220.0;
    const double x0 = 50.0, x1 = 700.0, y0 = 36.0, y1 = 190.0;
    std::size_t T = traj.steps.size();
    std::size_t M = traj.steps[0].robots[robot].priorities.size();

    SvgDoc svg;
    svg.append("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
               "viewBox=\"0 0 %.0f %.0f\">\n",
               w, h, w, h);
    svg.append("<rect width=\"%.0f\" height=\"%.0f\" fill=\"#ffffff\"/>\n", w, h);
    svg.append("<text x=\"16\" y=\"22\" font-family=\"monospace\" font-size=\"13\">robot %d "
               "priority shares</text>\n",
               robot);

    auto px = [&](std::size_t t) {
        // A single-step log still gets a visible sliver.
        double denom = T > 1 ? static_cast<double>(T - 1) : 1.0;
        double span = T > 1 ? x1 - x0 : 4.0;
        return x0 + span * static_cast<double>(t) / denom;
    };
    auto py = [&](double share) { return y1 - (y1 - y0) * share; };

    // cum[t][l] = stacked share boundary below layer l; cum[t][M] = 1.
    std::vector<std::vector<double>> cum(T, std::vector<double>(M + 1, 0.0));
    for (std::size_t t = 0; t < T; ++t) {
        const auto& phi = traj.steps[t].robots[robot].priorities;
        double total = 0.0;
        for (double v : phi) total += v;
        for (std::size_t l = 0; l < M; ++l) {
            double share = total > 0.0 && l < phi.size() ? phi[l] / total
                                                         : 1.0 / static_cast<double>(M);
            cum[t][l + 1] = cum[t][l] + share;
        }
    }
    for (std::size_t l = 0; l < M; ++l) {
        svg.append("<polygon fill=\"%s\" stroke=\"none\" points=\"",
                   object_color(static_cast<int>(l)));
        for (std::size_t t = 0; t < T; ++t) svg.append("%.2f,%.2f ", px(t), py(cum[t][l + 1]));
        for (std::size_t t = T; t-- > 0;) svg.append("%.2f,%.2f ", px(t), py(cum[t][l]));
        svg.append("\"/>\n");
    }

    svg.append("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
               "stroke=\"#333333\"/>\n",
               x0, y0, x1 - x0, y1 - y0);
    svg.append("<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\">0</text>\n",
               x0 - 14.0, y1 + 4.0);
    svg.append("<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\">1</text>\n",
               x0 - 14.0, y0 + 4.0);
    svg.append("<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\">t=%ld"
               "</text>\n",
               x1 - 30.0, y1 + 16.0, T > 0 ? traj.steps[T - 1].t : 0L);
    for (std::size_t l = 0; l < M; ++l) {
        double lx = x0 + 70.0 * static_cast<double>(l);
        svg.append("<rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", lx,
                   h - 18.0, object_color(static_cast<int>(l)));
        svg.append("<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" "
                   "font-size=\"11\">obj %zu</text>\n",
                   lx + 14.0, h - 9.0, l);
    }

    svg.append("</svg>\n");
    write_file(path, svg.buf);
}

}  // namespace

RenderResult replay_render(const Trajectory& traj, const std::string& out_dir, int window_steps) {
    if (window_steps <= 0) throw std::invalid_argument("window_steps must be positive");
    std::filesystem::create_directories(out_dir);

    RenderResult result;
    result.warning = traj.warning;

    Frame frame = make_frame(traj, 16.0, 36.0, 688.0);
    std::size_t steps = traj.steps.size();
    std::size_t windows = steps == 0 ? 1 : (steps + window_steps - 1) / window_steps;
    for (std::size_t wi = 0; wi < windows; ++wi) {
        std::size_t begin = wi * static_cast<std::size_t>(window_steps);
        std::size_t end = std::min(steps, begin + static_cast<std::size_t>(window_steps));
        char name[64];
        std::snprintf(name, sizeof(name), "trajectory_%03zu.svg", wi);
        std::string path = out_dir + "/" + name;
        render_window(traj, frame, begin, end, path);
        result.files.push_back(path);
    }

    if (!traj.steps.empty()) {
        std::size_t robots = traj.steps[0].robots.size();
        for (std::size_t i = 0; i < robots; ++i) {
            if (traj.steps[0].robots[i].priorities.empty()) continue;
            char name[64];
            std::snprintf(name, sizeof(name), "priorities_robot_%zu.svg", i);
            std::string path = out_dir + "/" + name;
            render_priorities(traj, static_cast<int>(i), path);
            result.files.push_back(path);
        }
    }
    return result;
}

}  // namespace tihdp
