#ifndef RGRPO_TESTS_ORACLES_HPP_
#define RGRPO_TESTS_ORACLES_HPP_
#endif
