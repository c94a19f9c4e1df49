# Models package
from app.models.base import *
from app.models.reports import *
from app.models.scenario import *
