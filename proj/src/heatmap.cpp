#include <png.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "hatedet/errors.hpp"
#include "hatedet/evaluate.hpp"

namespace hatedet {

namespace {

// 5x7 bitmaps for '0'..'9', one row per byte, high bit of the low 5 on the left.
constexpr std::array<std::array<std::uint8_t, 7>, 10> kDigits{{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
}};

struct Rgb {
    std::uint8_t r, g, b;
};

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h), Rgb{255, 255, 255}) {}

    void fill(int x0, int y0, int w, int h, Rgb c) {
        for (int y = std::max(0, y0); y < std::min(h_, y0 + h); ++y) {
            for (int x = std::max(0, x0); x < std::min(w_, x0 + w); ++x) px_[static_cast<std::size_t>(y * w_ + x)] = c;
        }
    }

    /// Draws decimal digits centred on (cx, cy) at the given pixel scale.
    void number(const std::string& text, int cx, int cy, int scale, Rgb c) {
        const int glyph_w = 6 * scale;
        int x = cx - static_cast<int>(text.size()) * glyph_w / 2;
        const int y = cy - 7 * scale / 2;
        for (char ch : text) {
            if (ch >= '0' && ch <= '9') {
                const auto& g = kDigits[static_cast<std::size_t>(ch - '0')];
                for (int row = 0; row < 7; ++row) {
                    for (int col = 0; col < 5; ++col) {
                        if (g[static_cast<std::size_t>(row)] & (0x10 >> col)) fill(x + col * scale, y + row * scale, scale, scale, c);
                    }
                }
            }
            x += glyph_w;
        }
    }

    void save(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
        if (!fp) throw MissingFile("cannot write " + path.string());
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!png || !info) {
            png_destroy_write_struct(&png, &info);
            throw MissingFile("libpng initialisation failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw MissingFile("libpng failed writing " + path.string());
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < h_; ++y) {
            auto* row = reinterpret_cast<png_bytep>(const_cast<Rgb*>(&px_[static_cast<std::size_t>(y * w_)]));
            png_write_row(png, row);
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }

private:
    int w_, h_;
    std::vector<Rgb> px_;
};

static_assert(sizeof(Rgb) == 3);

}  // namespace

void write_confusion_png(const EvalReport& report, const std::filesystem::path& path) {
    const int k = static_cast<int>(report.confusion.size());
    constexpr int kCell = 72;
    constexpr int kMargin = 12;
    Canvas canvas(2 * kMargin + k * kCell, 2 * kMargin + k * kCell);
    const Rgb grid{90, 90, 90};
    canvas.fill(kMargin - 1, kMargin - 1, k * kCell + 2, k * kCell + 2, grid);

    for (int g = 0; g < k; ++g) {
        std::size_t row_sum = 0;
        for (auto v : report.confusion[static_cast<std::size_t>(g)]) row_sum += v;
        for (int p = 0; p < k; ++p) {
            const std::size_t v = report.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
            const double t = row_sum ? static_cast<double>(v) / static_cast<double>(row_sum) : 0.0;
            // white -> dark blue
            const Rgb shade{static_cast<std::uint8_t>(255 - t * 227), static_cast<std::uint8_t>(255 - t * 187),
                            static_cast<std::uint8_t>(255 - t * 97)};
            const int x = kMargin + p * kCell;
            const int y = kMargin + g * kCell;
            canvas.fill(x + 1, y + 1, kCell - 2, kCell - 2, shade);
            const Rgb ink = t > 0.5 ? Rgb{255, 255, 255} : Rgb{20, 20, 20};
            const std::string label = std::to_string(v);
            canvas.number(label, x + kCell / 2, y + kCell / 2, label.size() > 3 ? 2 : 3, ink);
        }
    }
    canvas.save(path);
}

}  // namespace hatedet
