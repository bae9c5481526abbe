#pragma once

namespace corrtrack {

// Axis-aligned box, top-left corner plus size, in pixels.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
};

// Intersection over union; 0 when either box is degenerate.
double iou(const Box& a, const Box& b);

}  // namespace corrtrack
