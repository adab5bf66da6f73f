#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace strefine {

/// Dense row-major 2D sample array.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0)
            throw std::invalid_argument("Plane: negative dimensions");
        data_.assign(std::size_t(width) * std::size_t(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
    const T& at(int x, int y) const
    {
        return data_[std::size_t(y) * std::size_t(width_) + std::size_t(x)];
    }

    std::span<T> row(int y) { return {data_.data() + std::size_t(y) * std::size_t(width_), std::size_t(width_)}; }
    std::span<const T> row(int y) const
    {
        return {data_.data() + std::size_t(y) * std::size_t(width_), std::size_t(width_)};
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<const T> samples() const { return data_; }
    std::span<T> samples() { return data_; }

    bool operator==(const Plane&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using LumaPlane = Plane<unsigned char>;

/// Copies a width x height window whose top-left corner is (x0, y0).
template <typename T>
Plane<T> crop(const Plane<T>& src, int x0, int y0, int width, int height)
{
    if (x0 < 0 || y0 < 0 || x0 + width > src.width() || y0 + height > src.height())
        throw std::out_of_range("crop: window outside source plane");
    Plane<T> out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(x, y) = src.at(x0 + x, y0 + y);
    return out;
}

template <typename T>
void paste(Plane<T>& dst, const Plane<T>& block, int x0, int y0)
{
    if (x0 < 0 || y0 < 0 || x0 + block.width() > dst.width() || y0 + block.height() > dst.height())
        throw std::out_of_range("paste: block outside destination plane");
    for (int y = 0; y < block.height(); ++y)
        for (int x = 0; x < block.width(); ++x)
            dst.at(x0 + x, y0 + y) = block.at(x, y);
}

}  // namespace strefine
