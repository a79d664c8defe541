"""Deterministic simulator of an NFC battery-module sensor readout with
anti-counterfeit tag authentication.

Library layout:
  curve        secp128r1 arithmetic and ECDSA
  auth         tag provisioning, allowlist and signature checks
  link         reader/tag link, field model, command exchange
  battery      cell voltages, temperature sensor, module status
  orchestrator two-phase session driver on the virtual clock
  threats      adversary scenarios and the countermeasure mapping
  config       scenario/key/allowlist/tag-image file formats
  report       JSON/CSV reports and the rendered figures
  cli          the nfcbms command line
"""

from .auth import (
    AllowList,
    AuthOutcome,
    AuthStatus,
    OriginalitySignature,
    TagUid,
    VerifierConfig,
    authenticate,
    check_uid,
    provision_tag,
)
from .battery import (
    BatteryModule,
    ModuleStatus,
    TemperatureProfile,
    TemperatureSensor,
    VoltageProfile,
    bcc_collect,
    detect_thermal_alarm,
    emulate_cell_voltages,
)
from .clock import SimClock
from .curve import (
    SECP128R1,
    CurvePoint,
    EcdsaSignature,
    KeyPair,
    digest_uid,
    ecdsa_sign,
    ecdsa_verify,
    generate_keypair,
    keypair_from_private,
    point_add,
    scalar_mul,
)
from .link import FieldModel, LinkBus, NfcReaderDevice, NfcTagDevice
from .orchestrator import (
    InitFinal,
    InitReport,
    MonitorReport,
    PhaseTimings,
    SessionCache,
    System,
    resume_session,
    run_initialization,
    run_monitoring,
)
from .threats import ThreatScenario, ThreatSuiteReport, run_scenario, run_suite

__version__ = "0.1.0"
