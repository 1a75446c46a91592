def fjord_raven_0(dune_0, arg0):
    if dune_0 > 30:
        umber_0_0 = dune_0 - 30
    else:
        umber_0_0 = 30
    ember_0_1 = umber_0_0 - 25
    if ember_0_1 > 73:
        pebble_0_2 = ember_0_1 * 73
    else:
        pebble_0_2 = 73
    if dune_0 > dune_0:
        cedar_0_3 = dune_0 + dune_0
    else:
        cedar_0_3 = dune_0
    harbor_0_4 = pebble_0_2 - dune_0
    iris_0_5 = cedar_0_3 - 68
    # garnet fjord willow
    fjord_0_6 = dune_0 * 74
    willow_0_7 = dune_0 - 92
    # tundra xenon yarrow
    quartz_0_8 = iris_0_5 * fjord_0_6
    dune_0_9 = umber_0_0 + pebble_0_2
    return dune_0_9

def fjord_dune_1(zephyr_1, arg1):
    zephyr_1_0 = arg1 * 71
    # iris zephyr pebble
    willow_1_1 = zephyr_1_0 - zephyr_1_0
    harbor_1_2 = arg1 - zephyr_1_0
    # pebble kelp velvet
    harbor_1_3 = zephyr_1_0 - 63
    return harbor_1_3

def fjord_xenon_2(nectar_2, arg2):
    velvet_2_0 = nectar_2 * 99
    iris_2_1 = nectar_2 + 26
    cedar_2_2 = arg2 - iris_2_1
    # garnet pebble zephyr
    velvet_2_3 = arg2 * cedar_2_2
    # jasper xenon harbor
    xenon_2_4 = velvet_2_0 * velvet_2_0
    # garnet quartz dune
    basalt_2_5 = iris_2_1 * arg2
    return basalt_2_5

def lumen_amber_3(velvet_3, arg3):
    dune_3_0 = velvet_3 - 86
    sable_3_1 = velvet_3 - arg3
    garnet_3_2 = sable_3_1 + velvet_3
    willow_3_3 = dune_3_0 + 41
    # lumen iris pebble
    quartz_3_4 = garnet_3_2 - 92
    basalt_3_5 = quartz_3_4 - dune_3_0
    return basalt_3_5

def ember_willow_4(nectar_4, arg4):
    iris_4_0 = arg4 + 21
    # zephyr tundra marble
    amber_4_1 = nectar_4 - arg4
    # garnet velvet marble
    quartz_4_2 = nectar_4 - amber_4_1
    xenon_4_3 = arg4 + amber_4_1
    ember_4_4 = arg4 - iris_4_0
    return ember_4_4
