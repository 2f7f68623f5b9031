#ifndef FLOWSTITCH_PNG_IO_HPP
#define FLOWSTITCH_PNG_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace flowstitch::detail {

struct RawPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> bytes;
};

RawPng read_png(const std::string& path);
void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<uint8_t>& bytes);
void read_png_size(const std::string& path, int& width, int& height);

} // namespace flowstitch::detail

#endif
