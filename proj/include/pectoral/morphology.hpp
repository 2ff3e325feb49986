#pragma once

#include "pectoral/raster.hpp"

#include <cstdint>
#include <vector>

namespace pectoral {

enum class Connectivity { Four, Eight };

/// Discrete disk: offsets (dx, dy) with dx^2 + dy^2 <= radius^2.
class StructuringElement {
public:
    int radius() const noexcept { return radius_; }
    /// (2r+1) x (2r+1) footprint, centre at (r, r).
    const BinaryMask& footprint() const noexcept { return footprint_; }

private:
    friend StructuringElement disk_se(int radius);
    StructuringElement(int radius, BinaryMask footprint)
        : radius_(radius), footprint_(std::move(footprint))
    {
    }

    int radius_;
    BinaryMask footprint_;
};

StructuringElement disk_se(int radius);

// Binary morphology. Pixels outside the raster contribute nothing to a
// dilation and count as false for an erosion, so foreground touching the
// border erodes unless the whole disk fits.
BinaryMask binary_dilate(const BinaryMask& m, const StructuringElement& se);
BinaryMask binary_erode(const BinaryMask& m, const StructuringElement& se);
/// erode(dilate(m)) evaluated on a canvas padded by the disk radius and
/// cropped back, so the result always contains m.
BinaryMask binary_close(const BinaryMask& m, const StructuringElement& se);
BinaryMask binary_open(const BinaryMask& m, const StructuringElement& se);

/**
 * Grayscale reconstruction by dilation of `marker` under `mask`.
 *
 * Returns the fixed point of r <- min(dilate_unit(r), mask) started from
 * min(marker, mask). Hybrid scheme: a raster and an anti-raster sweep, then
 * queue propagation from the pixels that can still raise a neighbour. The
 * queue is drained brightest level first, so each pixel is settled once.
 * The result carries the mask's bit depth.
 */
GrayImage geodesic_reconstruct_dilation(const GrayImage& marker, const GrayImage& mask,
                                        Connectivity conn = Connectivity::Eight);

struct BoundingBox {
    int min_x = 0;
    int min_y = 0;
    int max_x = 0;
    int max_y = 0;
};

struct Component {
    int id = 0; // 1-based
    std::size_t pixel_count = 0;
    BoundingBox bbox;
};

/// Labels in first-appearance raster order; 0 marks background.
struct ComponentLabels {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;
    std::vector<Component> components; // components[i].id == i + 1

    std::int32_t label_at(int x, int y) const
    {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    bool contains(int id, int x, int y) const { return label_at(x, y) == id; }
    BinaryMask mask_of(int id) const;
};

ComponentLabels connected_components(const BinaryMask& m, Connectivity conn = Connectivity::Eight);

/// Largest component (lowest label on ties); empty mask in, empty mask out.
BinaryMask largest_component(const BinaryMask& m, Connectivity conn = Connectivity::Eight);

/// Sets every background region not 4-connected to the border.
BinaryMask fill_holes(const BinaryMask& m);

} // namespace pectoral
