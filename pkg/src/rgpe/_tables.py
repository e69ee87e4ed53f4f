"""Fixed numerical tables for the time-stepping schemes.

Rows of the CF*_A tables are stage exponents of the commutator-free
integrators, columns are Gauss-Legendre collocation nodes, first
applied stage first.  The splitting tables are kinetic/potential
coefficient lists of palindromic kinetic-first kernels with a trailing
zero potential coefficient.  Values carry 40 significant digits and
sit on their order-condition varieties to ~45 digits; they are
generated and machine-verified by tools/derive_tables.py.
"""


def _vals(strs):
    return tuple(float(s) for s in strs)


def _rows(rows):
    return tuple(tuple(float(s) for s in r) for r in rows)


GAUSS1_NODES = _vals([
    "0.50000000000000000000000000000000000000000",
])
GAUSS2_NODES = _vals([
    "0.21132486540518711774542560974902127217620",
    "0.78867513459481288225457439025097872782380",
])
GAUSS3_NODES = _vals([
    "0.11270166537925831148207346002176003891671",
    "0.50000000000000000000000000000000000000000",
    "0.88729833462074168851792653997823996108329",
])

CF2_A = ((1.0,),)
CF4_A = _rows([
    ("0.53867513459481288225457439025097872782380", "-0.038675134594812882254574390250978727823801"),
    ("-0.038675134594812882254574390250978727823801", "0.53867513459481288225457439025097872782380"),
])
CF4AF_A = _rows([
    ("0.42455086254183408902365795667372550396305", "-0.081836439409688918999678126779141218814045", "0.062684905025627213198564265548497251592503"),
    ("-0.20945798978968352444444444444444497777778", "0.60811732326382228244380069800272688207253", "-0.20945798978968352444444444444444497777778"),
    ("0.062684905025627213198564265548497251592503", "-0.081836439409688918999678126779141218814045", "0.42455086254183408902365795667372550396305"),
])
CF6AF_A = _rows([
    ("0.29011267575607032137954525104729649957725", "-0.063708393858278429022765891404346083730083", "0.015549612893226881650115210649170218508730"),
    ("-0.053639662171485778540267176575612566642734", "-0.020735275293217650996940281468838966850331", "0.00025919622845929033537360952051235840416103"),
    ("0.071222206660798414768136243839769913081252", "0.30666589137371830224192839509540727280264", "-0.045726251589291351815125360703358645150877"),
    ("-0.045726251589291351815125360703358645150877", "0.30666589137371830224192839509540727280264", "0.071222206660798414768136243839769913081252"),
    ("0.00025919622845929033537360952051235840416103", "-0.020735275293217650996940281468838966850331", "-0.053639662171485778540267176575612566642734"),
    ("0.015549612893226881650115210649170218508730", "-0.063708393858278429022765891404346083730083", "0.29011267575607032137954525104729649957725"),
])

# Four-exponential modified sixth-order scheme: stages 2 and 3 run the
# splitting over h/2 with the BBK_A2 weights (stage 3 reversed); stages
# 1 and 4 are pointwise phases exp(-i*h*(Wbar + BBK_WTILDE_COEF*h^2*G))
# with Wbar the BBK_A1-weighted potential (reversed for stage 4) and G
# the squared gradient of the node-3-minus-node-1 potential difference.
BBK_A1 = _vals([
    "0.077072129701152316028773696665457775615738",
    "-0.11111111111111111111111111111111111111111",
    "0.034038981409958795082337414445653335495373",
])
BBK_A2 = _vals([
    "0.51093185299621483423815692442510218762959",
    "0.66666666666666666666666666666666666666667",
    "-0.17759851966288150090482359109176885429626",
])
BBK_WTILDE_COEF = float("-0.000038580246913580246913580246913580246913580")

STRANG_ALPHA = (0.5, 0.5)
STRANG_BETA = (1.0, 0.0)
RKN74_ALPHA = _vals([
    "0.082984406417404990883022596022192529476245",
    "0.39630980149836807279045858589294147470617",
    "-0.039056304922348442852880081850630240852130",
    "0.11952419401315075835879779987099247333942",
    "-0.039056304922348442852880081850630240852130",
    "0.39630980149836807279045858589294147470617",
    "0.082984406417404990883022596022192529476245",
])
RKN74_BETA = _vals([
    "0.24529895718427113311806541788508787144480",
    "0.60487266571107992191761413636168676806024",
    "-0.35017162289535105503567955424677463950505",
    "-0.35017162289535105503567955424677463950505",
    "0.60487266571107992191761413636168676806024",
    "0.24529895718427113311806541788508787144480",
    "0.0",
])
RKN116_ALPHA = _vals([
    "0.080067160156931507283919037642508750466983",
    "0.22530604364749181245517192937266578605218",
    "-0.20499453908019652886285069376312070065926",
    "0.97023647553255969556965499087137336121614",
    "-0.55977697253831853625726401113050482973020",
    "-0.021676335436935900377262505985844734691683",
    "-0.55977697253831853625726401113050482973020",
    "0.97023647553255969556965499087137336121614",
    "-0.20499453908019652886285069376312070065926",
    "0.22530604364749181245517192937266578605218",
    "0.080067160156931507283919037642508750466983",
])
RKN116_BETA = _vals([
    "0.20746120925084404234844417490326662540669",
    "0.23439548107138512579520085537982957308024",
    "-0.026481108676321559683702875076066053962696",
    "0.0012978397805001513350274464559670695362380",
    "0.083326578573592240205030398337002785939531",
    "0.083326578573592240205030398337002785939531",
    "0.0012978397805001513350274464559670695362380",
    "-0.026481108676321559683702875076066053962696",
    "0.23439548107138512579520085537982957308024",
    "0.20746120925084404234844417490326662540669",
    "0.0",
])
