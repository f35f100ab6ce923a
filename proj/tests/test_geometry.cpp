// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <doctest.h>

#include "panometric/error.hpp"
#include "panometric/geometry.hpp"

using namespace panometric;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("pixel_to_sphere anchors") {
  // u = v = -1 exactly at pixel (0, 0), so both products are exact
  const SphereCoord origin = pixel_to_sphere(0, 0, 8, 4);
  CHECK(origin.azimuth == -kPi);
  CHECK(origin.elevation == -kPi / 2);

  const SphereCoord mid = pixel_to_sphere(4, 2, 8, 4);
  CHECK(mid.azimuth == 0.0);
  CHECK(mid.elevation == 0.0);

  // direct evaluation of both affine formulas at (2, 1)
  const SphereCoord c = pixel_to_sphere(2, 1, 8, 4);
  CHECK(c.azimuth == doctest::Approx(-kPi / 2).epsilon(1e-15));
  CHECK(c.elevation == doctest::Approx(-kPi / 4).epsilon(1e-15));
}

TEST_CASE("sphere_to_pixel anchors") {
  const PixelPos mid = sphere_to_pixel({0.0, 0.0}, 8, 4);
  CHECK(mid.x == 4.0);
  CHECK(mid.y == 2.0);

  const PixelPos origin = sphere_to_pixel({-kPi, -kPi / 2}, 8, 4);
  CHECK(origin.x == 0.0);
  CHECK(origin.y == 0.0);

  const PixelPos p = sphere_to_pixel({kPi / 2, kPi / 4}, 8, 4);
  CHECK(p.x == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(p.y == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("pixel round trip is exact on the lattice") {
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 64; ++i) {
      const PixelPos p = sphere_to_pixel(pixel_to_sphere(i, j, 64, 32), 64, 32);
      REQUIRE(p.x == static_cast<double>(i));
      REQUIRE(p.y == static_cast<double>(j));
    }
}

TEST_CASE("pixel_to_sphere is monotone in both axes") {
  double prev = pixel_to_sphere(0, 0, 64, 32).azimuth;
  for (int i = 1; i < 64; ++i) {
    const double az = pixel_to_sphere(i, 0, 64, 32).azimuth;
    REQUIRE(az > prev);
    prev = az;
  }
  prev = pixel_to_sphere(0, 0, 64, 32).elevation;
  for (int j = 1; j < 32; ++j) {
    const double el = pixel_to_sphere(0, j, 64, 32).elevation;
    REQUIRE(el > prev);
    prev = el;
  }
}

TEST_CASE("distortion map anchor pixels") {
  const DistortionMap map = build_distortion_map(8, 4);
  // u = v = 0 exactly at the center pixel, so sin is +0 and cos is 1
  CHECK(map.at(4, 2, 0) == 0.0);
  CHECK(map.at(4, 2, 1) == 1.0);
  CHECK(map.at(4, 2, 2) == 0.0);
  CHECK(map.at(4, 2, 3) == 1.0);

  // sin/cos of pi * (-0.5) on both axes
  CHECK(map.at(2, 1, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(map.at(2, 1, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(map.at(2, 1, 2) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(map.at(2, 1, 3) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("distortion map seam periodicity at 512x256") {
  const DistortionMap map = build_distortion_map(512, 256);
  // the analytic extension one column past the right edge (u = +1) must
  // match column 0 (u = -1)
  for (int j = 0; j < 256; ++j) {
    CHECK(std::fabs(std::sin(kPi) - map.at(0, j, 0)) < 1e-12);
    CHECK(std::fabs(std::cos(kPi) - map.at(0, j, 1)) < 1e-12);
  }
}

TEST_CASE("distortion map channel pairs lie on the unit circle") {
  const DistortionMap map = build_distortion_map(512, 256);
  for (int j = 0; j < 256; ++j)
    for (int i = 0; i < 512; ++i) {
      const double az = map.at(i, j, 0) * map.at(i, j, 0) + map.at(i, j, 1) * map.at(i, j, 1);
      const double el = map.at(i, j, 2) * map.at(i, j, 2) + map.at(i, j, 3) * map.at(i, j, 3);
      REQUIRE(std::fabs(az - 1.0) < 1e-12);
      REQUIRE(std::fabs(el - 1.0) < 1e-12);
    }
}

TEST_CASE("distortion map downsample renormalizes channel pairs") {
  const DistortionMap map = build_distortion_map(64, 32);
  const DistortionMap small = downsample_distortion_map(map, 4);
  REQUIRE(small.width == 16);
  REQUIRE(small.height == 8);
  for (int j = 0; j < small.height; ++j)
    for (int i = 0; i < small.width; ++i) {
      const double az =
          small.at(i, j, 0) * small.at(i, j, 0) + small.at(i, j, 1) * small.at(i, j, 1);
      const double el =
          small.at(i, j, 2) * small.at(i, j, 2) + small.at(i, j, 3) * small.at(i, j, 3);
      REQUIRE(std::fabs(az - 1.0) < 1e-12);
      REQUIRE(std::fabs(el - 1.0) < 1e-12);
    }
}

TEST_CASE("geometry dimension checks") {
  CHECK_THROWS_AS(build_distortion_map(9, 4), ValidationError);
  CHECK_THROWS_AS(build_distortion_map(0, 0), ValidationError);
  CHECK_THROWS_AS(pixel_to_sphere(8, 0, 8, 4), ValidationError);
}
