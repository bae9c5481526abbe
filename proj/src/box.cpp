#include "corrtrack/box.hpp"

#include <algorithm>

namespace corrtrack {

double iou(const Box& a, const Box& b) {
    if (a.w <= 0.0 || a.h <= 0.0 || b.w <= 0.0 || b.h <= 0.0) return 0.0;
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

}  // namespace corrtrack
