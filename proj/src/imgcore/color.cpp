#include "forgesr/imgcore/color.hpp"

namespace forgesr {

LabImage srgb_to_lab(const Image& img) {
  LabImage out(img.height(), img.width());
  const auto& src = img.planes();
  auto& dst = out.planes();
  for (Eigen::Index i = 0; i < img.pixel_count(); ++i) {
    const Rgb<double> rgb = src.col(i).cast<double>();
    dst.col(i) = srgb_to_lab<double>(rgb).array();
  }
  return out;
}

Image lab_to_srgb(const LabImage& lab) {
  Image out(lab.height(), lab.width());
  const auto& src = lab.planes();
  auto& dst = out.planes();
  for (Eigen::Index i = 0; i < lab.pixel_count(); ++i) {
    const Lab<double> c = src.col(i);
    dst.col(i) = lab_to_srgb<double>(c).cast<float>().array();
  }
  return out;
}

Image color_shift_lab(const Image& img, const ShiftSpec& shift) {
  LabImage lab = srgb_to_lab(img);
  lab.planes().row(0) += shift.dL;
  lab.planes().row(1) += shift.da;
  lab.planes().row(2) += shift.db;
  return lab_to_srgb(lab);
}

double mean_ciede2000(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw InvalidArgument("mean_ciede2000: dimension mismatch");
  const LabImage la = srgb_to_lab(a);
  const LabImage lb = srgb_to_lab(b);
  double total = 0.0;
  for (Eigen::Index i = 0; i < la.pixel_count(); ++i) {
    const Lab<double> c1 = la.planes().col(i);
    const Lab<double> c2 = lb.planes().col(i);
    total += ciede2000<double>(c1, c2);
  }
  return total / static_cast<double>(la.pixel_count());
}

}  // namespace forgesr
