#pragma once

#include "lumisplit/core.hpp"

namespace lumisplit {

// UV rasters for the local reflectance model: diffuse RGB plus scalar
// specular and roughness albedos, all in [0,1].
struct TextureSet {
    Image diffuse;    // 3 channels
    Image specular;   // 1 channel
    Image roughness;  // 1 channel

    TextureSet() = default;
    TextureSet(int w, int h)
        : diffuse(w, h, 3), specular(w, h, 1), roughness(w, h, 1) {}
    int width() const { return diffuse.w; }
    int height() const { return diffuse.h; }
};

}  // namespace lumisplit
