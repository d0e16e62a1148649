// Geodesics of F_tau on the unit disk for several tau, next to the Euler-Lagrange trajectories
// of the disk Lagrangian at energy 1/tau^2. Writes one CSV per curve and a combined SVG.
//
//   disk_geodesics [out_dir]

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "routhlab/routhlab.hpp"
#include "routhlab/io.hpp"

using namespace routhlab;

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "disk_geodesics_out";
  Vec x0(2), y0(2);
  x0 << 0.3, 0.0;
  y0 << 0.0, 1.0;
  const LagrangianModel L = poincare_magnetic();

  std::vector<PlotCurve> curves;
  for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0, 1.5}) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "tau_%.2f", tau);
    GeodesicOptions go;
    go.integrate.samples = 801;
    try {
      const Trajectory g = integrate_geodesic(ftau(tau), x0, y0, 2.0, go);
      write_text_file(out / (std::string(tag) + "_geodesic.csv"), to_csv(g));
      curves.push_back(plot_curve(g, std::string(tag) + " geodesic"));
      const CircleFit fit = circle_fit(planar_points(g));
      std::printf("%s  ", tag);
      if (fit.collinear) {
        std::printf("line, rms %.2e", fit.rms_residual);
      } else {
        std::printf("circle center (%.5f, %.5f) radius %.5f, rms %.2e", fit.center.x(),
                    fit.center.y(), fit.radius, fit.rms_residual);
      }
      try {
        std::printf(", boundary angle %.4f deg", boundary_angle(fit));
      } catch (const NoIntersection&) {
        std::printf(", inside the disk");
      }
      std::printf("\n");
    } catch (const Error& e) {
      std::printf("%s  geodesic failed: %s\n", tag, e.what());
      continue;
    }
    if (tau == 0.0) continue;
    try {
      const double e = 1.0 / (tau * tau);
      IntegrateOptions io;
      io.samples = 801;
      const Vec v0 = rescale_to_energy(L, x0, y0, e);
      const Trajectory a = integrate_el(L, x0, v0, 2.0 / v0.norm(), io);
      write_text_file(out / (std::string(tag) + "_el.csv"), to_csv(a));
    } catch (const Error& e) {
      std::printf("%s  EL trajectory failed: %s\n", tag, e.what());
    }
  }
  PlotOptions po;
  po.unit_disk = true;
  po.title = "F_tau geodesics through (0.3, 0)";
  write_text_file(out / "disk_geodesics.svg", render_svg(curves, po));
  std::printf("wrote %s\n", (out / "disk_geodesics.svg").string().c_str());
  return 0;
}
