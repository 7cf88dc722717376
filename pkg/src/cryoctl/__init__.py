from .errors import CryoCtlError
